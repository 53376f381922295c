#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "ncelab/assemble.hpp"
#include "ncelab/minimize.hpp"
#include "ncelab/pipeline.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/solve_result.hpp"
#include "ncelab/spectral.hpp"

namespace ncelab {

/// Right-hand side family for the general structural class: the model form
/// H = c0 u + mu(x) <A grad u, grad u> + f, optionally with the gradient term
/// clipped at a fixed level (the truncated variant behind the growth trick).
/// mu_bound is the structural slope constant measured against the plain
/// |grad u|^2; zero selects mu2 * Lambda_A, which dominates this family.
struct GeneralH {
  enum class Form { model, clipped };
  Form form = Form::model;
  double clip = std::numeric_limits<double>::infinity();
  double mu_bound = 0.0;
};

inline double structural_slope_bound(const ProblemData& data, const GeneralH& h) {
  if (h.mu_bound > 0.0) return h.mu_bound;
  return data.coupling().upper() * data.A().lambda_upper();
}

/// Nodal H(x, u, grad_h u).
inline ScalarField general_rhs(const ProblemData& data, const GeneralH& h, const ScalarField& u) {
  const ScalarField q = gradient_sq(data.A(), u);
  ScalarField out(data.grid());
  for (std::int64_t i = 0; i < out.size(); ++i) {
    double grad_term = q[i];
    if (h.form == GeneralH::Form::clipped) grad_term = std::min(grad_term, h.clip);
    out[i] = data.c0()[i] * u[i] + data.coupling().at(i) * grad_term + data.f()[i];
  }
  return out;
}

/// Nodal residual L_A u - H(x, u, grad_h u) of the untransformed equation.
inline ScalarField general_residual(const ProblemData& data, const GeneralH& h,
                                    const ScalarField& u) {
  ScalarField r = apply_operator(data.A(), u);
  const ScalarField rhs = general_rhs(data, h, u);
  for (std::int64_t i = 0; i < r.size(); ++i) r[i] -= rhs[i];
  return r;
}

/// Damped Newton directly in the original variable. The Jacobian is
/// nonsymmetric: L_A - diag(c0) minus the centered-difference derivative of
/// the gradient term, which vanishes at clipped nodes. When a bracket is
/// given, every iterate (and the start) is clamped into it nodewise; a
/// clamped step that fails to reduce the residual is retried at half length.
inline SolveResult newton_direct(const ProblemData& data, const GeneralH& h,
                                 const ScalarField& u_init, const ScalarField* lower,
                                 const ScalarField* upper, double tol = 1e-10,
                                 int max_iter = 200) {
  require_same_grid(u_init.grid(), data.grid());
  const Grid& g = data.grid();
  const int N = g.dim();
  const auto base_triplets = operator_triplets(data.A());

  SolveResult res(u_init, SolveKind::Newton);
  ScalarField& u = res.v;
  const auto clamp = [&](ScalarField& w) {
    if (lower == nullptr) return;
    for (std::int64_t i = 0; i < w.size(); ++i)
      w[i] = std::min(std::max(w[i], (*lower)[i]), (*upper)[i]);
  };
  clamp(u);

  for (int k = 0; k < max_iter; ++k) {
    ScalarField r = general_residual(data, h, u);
    const double u_norm = h1_norm(data.A(), u);
    const double rn = scaled_residual_norm(r, u_norm);
    const double phi0 = 0.5 * dot_quad(r, r);
    res.residual_norm = rn;
    res.iterations = k;
    res.log.push_back({k, rn, 0.0, (1.0 + u_norm) * rn});
    if (!std::isfinite(rn)) throw solver_error("Newton residual is not finite");
    if (rn <= tol) {
      res.converged = true;
      break;
    }

    const ScalarField q = gradient_sq(data.A(), u);
    auto triplets = base_triplets;
    std::array<int, 3> m{0, 0, 0};
    for (std::int64_t i = 0; i < u.size(); ++i) {
      triplets.emplace_back(static_cast<int>(i), static_cast<int>(i), -data.c0()[i]);
      const bool slope_active = h.form == GeneralH::Form::model || q[i] < h.clip;
      if (slope_active) {
        double grad[3] = {0.0, 0.0, 0.0};
        for (int d = 0; d < N; ++d) {
          const std::int64_t s = g.stride(d);
          const double up = (m[d] + 1 < g.count(d)) ? u[i + s] : 0.0;
          const double um = (m[d] > 0) ? u[i - s] : 0.0;
          grad[d] = (up - um) / (2.0 * g.spacing(d));
        }
        for (int d = 0; d < N; ++d) {
          double a_grad = 0.0;
          for (int e = 0; e < N; ++e) a_grad += data.A().entry(i, d, e) * grad[e];
          const double w = data.coupling().at(i) * a_grad / g.spacing(d);
          const std::int64_t s = g.stride(d);
          if (m[d] + 1 < g.count(d))
            triplets.emplace_back(static_cast<int>(i), static_cast<int>(i + s), -w);
          if (m[d] > 0) triplets.emplace_back(static_cast<int>(i), static_cast<int>(i - s), w);
        }
      }
      g.advance(m);
    }
    Eigen::SparseMatrix<double> J(static_cast<int>(u.size()), static_cast<int>(u.size()));
    J.setFromTriplets(triplets.begin(), triplets.end());
    LuSolver lu(std::move(J));
    if (lu.regularized()) res.jacobian_regularized = true;
    const ScalarField d = from_vector(g, lu.solve(-to_vector(r)));

    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      ScalarField cand = add_scaled(u, alpha, d);
      clamp(cand);
      ScalarField rc = general_residual(data, h, cand);
      const double phic = 0.5 * dot_quad(rc, rc);
      if (std::isfinite(phic) && phic <= phi0 * (1.0 - 2.0 * 1e-4 * alpha)) {
        u = std::move(cand);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // residual floor reached; rn already recorded
  }

  if (!res.converged && !res.log.empty()) {
    ScalarField r = general_residual(data, h, u);
    res.residual_norm = scaled_residual_norm(r, h1_norm(data.A(), u));
    res.converged = res.residual_norm <= tol;
  }
  res.min_v = min_value(u);
  return res;
}

struct Bracket {
  ScalarField lower;
  ScalarField upper;
  SolveResult extremal;  // minimizer-branch solve of the extremal equation
};

/// Ordered sub/supersolution pair for the general problem. The upper field
/// solves the extremal equation -div(A grad u) = (mu/lambda) <A grad u,
/// grad u> + |c0| u + |f| through the transformed minimizer branch, then a
/// short Newton polish in the original variable pins its nodal residual to
/// round-off (the change of unknown alone leaves an O(h^2) discrepancy
/// between the two discretizations). The lower field is its negative. Both
/// are verified nodewise against the caller's H at tolerance 1e-8.
inline Bracket build_bracket(const ProblemData& data, const GeneralH& h = {}, double tol = 1e-8) {
  const Grid& g = data.grid();
  const double slope = structural_slope_bound(data, h) / data.A().lambda_lower();
  ScalarField c0_abs(g), f_abs(g);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    c0_abs[i] = std::abs(data.c0()[i]);
    f_abs[i] = std::abs(data.f()[i]);
  }
  const ProblemData extremal(data.A(), std::move(c0_abs), std::move(f_abs),
                             GradientCoupling::constant(slope), data.p());

  const double lam = coercivity_lambda(extremal.A(), coercivity_weight(extremal));
  if (!(lam > 0.0))
    throw hypothesis_error("the extremal comparison problem is not coercive (lambda = " +
                           format_double(lam) + ")");

  const RhoReference ref = default_ball_radius(extremal);
  SolveResult bar = minimize_local(extremal, ref.rho);
  detail::accept_at_tolerance(bar, tol, "the extremal minimizer");
  if (!(bar.min_v > -1.0 / (2.0 * slope)))
    throw certificate_error("lower-bound certificate failed on the extremal solve: min v = " +
                            format_double(bar.min_v));
  bar.lower_bound_ok = true;

  GeneralH extremal_h;  // model form with the extremal constant slope
  SolveResult polish = newton_direct(extremal, extremal_h, v_to_u(bar.v, slope), nullptr,
                                     nullptr, 1e-12, 50);
  detail::accept_at_tolerance(polish, tol, "the extremal polish");
  ScalarField ubar = std::move(polish.v);
  bar.u = ubar;

  const double lowest = min_value(ubar);
  if (lowest < -1e-10)
    throw solver_error("the extremal solution lost nonnegativity (min = " +
                       format_double(lowest) + ")");

  ScalarField lower_field(g);
  for (std::int64_t i = 0; i < g.size(); ++i) lower_field[i] = -ubar[i];
  Bracket bracket{std::move(lower_field), std::move(ubar), std::move(bar)};

  const ScalarField r_sup = general_residual(data, h, bracket.upper);
  const ScalarField r_sub = general_residual(data, h, bracket.lower);
  double worst_sup = std::numeric_limits<double>::infinity();
  double worst_sub = -std::numeric_limits<double>::infinity();
  std::int64_t node_sup = 0, node_sub = 0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    if (r_sup[i] < worst_sup) {
      worst_sup = r_sup[i];
      node_sup = i;
    }
    if (r_sub[i] > worst_sub) {
      worst_sub = r_sub[i];
      node_sub = i;
    }
  }
  if (worst_sup < -1e-8)
    throw solver_error("supersolution inequality violated: residual " + format_double(worst_sup) +
                       " at node " + std::to_string(node_sup));
  if (worst_sub > 1e-8)
    throw solver_error("subsolution inequality violated: residual " + format_double(worst_sub) +
                       " at node " + std::to_string(node_sub));
  return bracket;
}

struct GeneralOutcome {
  SolveResult solution;
  Bracket bracket;
  bool sign_flipped = false;
};

/// Bracketed solve of the general equation: clamped damped Newton on the
/// discrete equation in the original variable, started from 0 and kept inside
/// [lower, upper] nodewise after each step. Clamped-Newton failure is reported
/// as a finding on the instance: the existence theory promises a solution
/// between the brackets, not that this iteration reaches it.
inline GeneralOutcome solve_general(const ProblemData& raw, const GeneralH& h = {},
                                    const PipelineOptions& opts = {}) {
  const SignNormalized norm = sign_normalize(raw);
  const ProblemData& data = norm.data;

  Bracket bracket = build_bracket(data, h, opts.tol);
  SolveResult res(ScalarField(data.grid()), SolveKind::Bracketed);

  {
    ScalarField zero(data.grid());
    res = newton_direct(data, h, zero, &bracket.lower, &bracket.upper, opts.tol, 200);
    if (!res.converged)
      throw solver_error("clamped Newton stalled inside the bracket at scaled residual " +
                         format_double(res.residual_norm) +
                         " (a finding on this instance: existence is guaranteed between the "
                         "brackets, this iteration is not)");
    res.u = res.v;
    const double ln2 = 0.6931471805599453;
    bool above_floor = true;
    for (std::int64_t i = 0; i < res.v.size(); ++i)
      above_floor = above_floor && res.v[i] > -ln2 / data.coupling().at(i);
    res.lower_bound_ok = above_floor;
  }
  res.kind = SolveKind::Bracketed;

  bool inside = true;
  for (std::int64_t i = 0; i < res.u->size(); ++i) {
    if ((*res.u)[i] < bracket.lower[i] - 1e-10 || (*res.u)[i] > bracket.upper[i] + 1e-10) {
      inside = false;
      break;
    }
  }
  res.bracket_ok = inside;

  if (norm.flipped) {
    for (std::int64_t i = 0; i < res.u->size(); ++i) (*res.u)[i] = -(*res.u)[i];
    for (std::int64_t i = 0; i < res.v.size(); ++i) res.v[i] = -res.v[i];
    ScalarField new_lower(data.grid()), new_upper(data.grid());
    for (std::int64_t i = 0; i < data.grid().size(); ++i) {
      new_lower[i] = -bracket.upper[i];
      new_upper[i] = -bracket.lower[i];
    }
    bracket.lower = std::move(new_lower);
    bracket.upper = std::move(new_upper);
  }
  return {std::move(res), std::move(bracket), norm.flipped};
}

}  // namespace ncelab
