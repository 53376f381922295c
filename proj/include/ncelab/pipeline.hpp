#pragma once

#include <algorithm>
#include <cmath>
#include <utility>

#include "ncelab/cg.hpp"
#include "ncelab/energy.hpp"
#include "ncelab/hypotheses.hpp"
#include "ncelab/minimize.hpp"
#include "ncelab/mountain_pass.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/rng.hpp"
#include "ncelab/solve_result.hpp"
#include "ncelab/spectral.hpp"

namespace ncelab {

/// Solution of the linear comparison problem (L_A - diag(h)) v = rhs by
/// conjugate gradients, packaged with the quadratic energy
/// (1/2)(<L_A v, v> - int h v^2) - int rhs v.
inline SolveResult solve_linear(const ScalarField& h, const ScalarField& rhs,
                                const ProblemData& data, double rel_tol = 1e-12) {
  CgOutcome cg = solve_cg(data.A(), h, rhs, rel_tol);
  SolveResult res(std::move(cg.x), SolveKind::Linear);
  res.iterations = cg.iterations;
  res.residual_norm = cg.rel_residual;
  res.converged = true;
  const double vol = data.grid().cell_volume();
  double weighted = 0.0;
  double forcing = 0.0;
  for (std::int64_t i = 0; i < res.v.size(); ++i) {
    weighted += h[i] * res.v[i] * res.v[i];
    forcing += rhs[i] * res.v[i];
  }
  res.energy = 0.5 * (h1_seminorm_sq(data.A(), res.v) - weighted * vol) - forcing * vol;
  res.min_v = min_value(res.v);
  return res;
}

struct RhoReference {
  ScalarField v_ref;  // solution of the c0 = 0 comparison problem
  double rho;         // 4 ||v_ref||_A, floored at 1e-6
};

/// Separating radius between the local well at the origin and the high field
/// beyond the ridge, calibrated by the linear response to f alone.
inline RhoReference default_ball_radius(const ProblemData& data) {
  const double mu = data.mu();
  ScalarField h(data.grid());
  for (std::int64_t i = 0; i < h.size(); ++i) h[i] = mu * data.f()[i];
  CgOutcome cg = solve_cg(data.A(), h, data.f());
  RhoReference ref{std::move(cg.x), 0.0};
  ref.rho = std::max(4.0 * h1_norm(data.A(), ref.v_ref), 1e-6);
  return ref;
}

struct PipelineOptions {
  double tol = 1e-8;         // pipeline acceptance on the scaled residual
  double rho = 0.0;          // ball radius override; 0 selects the default
  double descent_tol = 1e-9;
  double newton_tol = 1e-12;
  int path_nodes = 21;
  int max_descent = 2000;
  int max_sweeps = 20000;
};

struct BothOutcome {
  SolveResult minimum;
  SolveResult pass;
  HypothesisReport report;
  double rho = 0.0;
  bool sign_flipped = false;
  double separation = 0.0;  // ||u_min - u_mp||_inf / max(1, ||u_min||_inf)
};

namespace detail {

inline void require_positive_on_sphere(const ProblemData& data, double rho,
                                       const ScalarField& dir, const char* label) {
  const double norm = h1_norm(data.A(), dir);
  if (!(norm > 0.0)) return;
  ScalarField probe(data.grid());
  const double scale = rho / norm;
  for (std::int64_t i = 0; i < probe.size(); ++i) probe[i] = scale * dir[i];
  const double e = energy_value(probe, data);
  if (!(e > 0.0))
    throw geometry_error(std::string("no mountain ridge at radius rho = ") + format_double(rho) +
                         ": I <= 0 along the " + label + " direction (I = " + format_double(e) +
                         ")");
}

/// Spot check of the mountain geometry: the energy must be strictly positive
/// on the separating sphere along the structured directions (linear response,
/// Riesz representative of f, concentration mode) and a seeded random sample.
inline void sphere_check(const ProblemData& data, double rho, const ScalarField& v_ref,
                         const ScalarField& phi) {
  require_positive_on_sphere(data, rho, v_ref, "linear response");
  const SobolevSolver fac(data.A());
  require_positive_on_sphere(data, rho, fac.solve(data.f()), "Riesz forcing");
  require_positive_on_sphere(data, rho, phi, "concentration mode");
  for (int j = 0; j < 8; ++j) {
    Rng rng(0x6e63656c61620300ULL + static_cast<std::uint64_t>(j));
    ScalarField w(data.grid());
    for (std::int64_t i = 0; i < w.size(); ++i) w[i] = rng.symmetric();
    require_positive_on_sphere(data, rho, w, "random sample");
  }
}

inline void accept_at_tolerance(SolveResult& res, double tol, const char* stage) {
  if (res.converged) return;
  if (res.residual_norm <= tol) {
    res.converged = true;
    return;
  }
  throw solver_error(std::string(stage) + " stalled at scaled residual " +
                     format_double(res.residual_norm) + " above the tolerance " +
                     format_double(tol));
}

}  // namespace detail

struct BranchOutcome {
  SolveResult result;
  HypothesisReport report;
  double rho = 0.0;
  bool sign_flipped = false;
};

namespace detail {

inline void certify_and_restore(SolveResult& res, const ProblemData& data, bool flipped) {
  const double mu = data.mu();
  const double bound = -1.0 / (2.0 * mu);
  if (!(res.min_v > bound))
    throw certificate_error("lower-bound certificate failed: min v = " +
                            format_double(res.min_v) + " is not above -1/(2 mu) = " +
                            format_double(bound));
  res.lower_bound_ok = true;
  ScalarField u = v_to_u(res.v, mu);
  if (flipped)
    for (std::int64_t i = 0; i < u.size(); ++i) u[i] = -u[i];
  res.u = std::move(u);
}

}  // namespace detail

/// The minimizer branch alone: coercivity gate, separating ball, descent with
/// Newton polish, certificate, and the change of unknown back to u.
inline BranchOutcome solve_model_min(const ProblemData& raw, const PipelineOptions& opts = {}) {
  const SignNormalized norm = sign_normalize(raw);
  const ProblemData& data = norm.data;
  data.require_multiplicity_mode();

  BranchOutcome out{SolveResult(ScalarField(data.grid()), SolveKind::LocalMin),
                    check_hypotheses(data), 0.0, norm.flipped};
  if (!out.report.coercive_ok)
    throw hypothesis_error("coercivity fails: lambda(c0 + mu f+) = " +
                           format_double(out.report.coercivity) + " <= 0");

  RhoReference ref = default_ball_radius(data);
  out.rho = opts.rho > 0.0 ? opts.rho : ref.rho;
  out.result = minimize_local(data, out.rho, opts.descent_tol, opts.newton_tol, opts.max_descent);
  detail::accept_at_tolerance(out.result, opts.tol, "the minimizer branch");
  detail::certify_and_restore(out.result, data, norm.flipped);
  return out;
}

/// The mountain pass branch alone: both hypothesis gates, the climb start from
/// the concentration mode, the sphere check, the path deformation, certificate,
/// and the change of unknown back to u.
inline BranchOutcome solve_model_mp(const ProblemData& raw, const PipelineOptions& opts = {}) {
  const SignNormalized norm = sign_normalize(raw);
  const ProblemData& data = norm.data;
  data.require_multiplicity_mode();

  BranchOutcome out{SolveResult(ScalarField(data.grid()), SolveKind::MountainPass),
                    check_hypotheses(data), 0.0, norm.flipped};
  if (!out.report.coercive_ok)
    throw hypothesis_error("coercivity fails: lambda(c0 + mu f+) = " +
                           format_double(out.report.coercivity) + " <= 0");
  if (!out.report.h2_ok)
    throw hypothesis_error("the smallness hypothesis fails: mu ||f||_{3/2} = " +
                           format_double(out.report.mu * out.report.f_norm_slot) +
                           " is not below 1/C_h = " +
                           format_double(1.0 / out.report.sobolev_ratio));

  RhoReference ref = default_ball_radius(data);
  out.rho = opts.rho > 0.0 ? opts.rho : ref.rho;
  const DominantMode mode = dominant_weighted_mode(data.A(), data.c0());
  const ScalarField v0 = find_v0(data, out.rho);
  detail::sphere_check(data, out.rho, ref.v_ref, mode.phi);
  out.result = mountain_pass(data, v0, opts.path_nodes, opts.descent_tol, opts.max_sweeps,
                             opts.newton_tol);
  detail::accept_at_tolerance(out.result, opts.tol, "the mountain pass");
  detail::certify_and_restore(out.result, data, norm.flipped);
  return out;
}

/// Both solutions of the multiplicity problem: the local minimizer inside the
/// separating ball and the mountain pass solution beyond it, with hypothesis
/// report, lower-bound certificates, the change of unknown back to u, and a
/// distinctness measurement. A negative coupling is handled by the sign
/// normalization (mu, f) -> (-mu, -f); the returned u fields are negated back
/// while v stays in the normalized frame.
inline BothOutcome solve_model_both(const ProblemData& raw, const PipelineOptions& opts = {}) {
  const SignNormalized norm = sign_normalize(raw);
  const ProblemData& data = norm.data;
  data.require_multiplicity_mode();

  BothOutcome out{SolveResult(ScalarField(data.grid()), SolveKind::LocalMin),
                  SolveResult(ScalarField(data.grid()), SolveKind::MountainPass),
                  check_hypotheses(data), 0.0, norm.flipped, 0.0};
  if (!out.report.coercive_ok)
    throw hypothesis_error("coercivity fails: lambda(c0 + mu f+) = " +
                           format_double(out.report.coercivity) + " <= 0");
  if (!out.report.h2_ok)
    throw hypothesis_error("the smallness hypothesis fails: mu ||f||_{3/2} = " +
                           format_double(out.report.mu * out.report.f_norm_slot) +
                           " is not below 1/C_h = " +
                           format_double(1.0 / out.report.sobolev_ratio));

  RhoReference ref = default_ball_radius(data);
  out.rho = opts.rho > 0.0 ? opts.rho : ref.rho;

  out.minimum = minimize_local(data, out.rho, opts.descent_tol, opts.newton_tol, opts.max_descent);
  detail::accept_at_tolerance(out.minimum, opts.tol, "the minimizer branch");

  const DominantMode mode = dominant_weighted_mode(data.A(), data.c0());
  const ScalarField v0 = find_v0(data, out.rho);
  detail::sphere_check(data, out.rho, ref.v_ref, mode.phi);

  out.pass = mountain_pass(data, v0, opts.path_nodes, opts.descent_tol, opts.max_sweeps,
                           opts.newton_tol);
  detail::accept_at_tolerance(out.pass, opts.tol, "the mountain pass");

  for (SolveResult* r : {&out.minimum, &out.pass})
    detail::certify_and_restore(*r, data, norm.flipped);

  if (!(out.minimum.energy <= 0.0 && out.pass.energy > 0.0))
    throw solver_error("energy ordering violated: I(v_min) = " +
                       format_double(out.minimum.energy) + ", I(v_mp) = " +
                       format_double(out.pass.energy));

  const ScalarField& u1 = *out.minimum.u;
  const ScalarField& u2 = *out.pass.u;
  double diff = 0.0;
  for (std::int64_t i = 0; i < u1.size(); ++i)
    diff = std::max(diff, std::abs(u1[i] - u2[i]));
  out.separation = diff / std::max(1.0, linf_norm(u1));
  if (!(out.separation > 1e-4))
    throw solver_error("the two branches coincide: relative sup separation = " +
                       format_double(out.separation));
  return out;
}

}  // namespace ncelab
