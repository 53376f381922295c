#pragma once

#include <cmath>
#include <limits>
#include <utility>

#include "ncelab/assemble.hpp"
#include "ncelab/energy.hpp"
#include "ncelab/newton.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/solve_result.hpp"

namespace ncelab {

/// Local minimizer of I inside the ball ||v||_A <= rho: descent from v = 0
/// along the H1 representative of the gradient with Armijo backtracking,
/// iterates projected onto the ball, then a Newton polish. The polish is
/// kept only if it stays inside the ball.
inline SolveResult minimize_local(const ProblemData& data, double rho, double tol = 1e-9,
                                  double newton_tol = 1e-12, int max_iter = 2000) {
  if (!(rho > 0.0)) throw config_error("minimize_local needs a positive ball radius");
  const SobolevSolver fac(data.A());
  SolveResult res(ScalarField(data.grid()), SolveKind::LocalMin);
  ScalarField& v = res.v;
  double energy_cur = 0.0;
  bool projected_last = false;
  double best_rn = std::numeric_limits<double>::infinity();
  int since_best = 0;

  for (int k = 0; k < max_iter; ++k) {
    ScalarField r = energy_gradient(v, data);
    const double v_norm = h1_norm(data.A(), v);
    const double rn = scaled_residual_norm(r, v_norm);
    res.iterations = k;
    res.residual_norm = rn;
    res.log.push_back({k, rn, energy_cur, (1.0 + v_norm) * rn});
    if (rn <= tol) {
      res.converged = true;
      break;
    }
    if (rn < 0.999 * best_rn) {
      best_rn = rn;
      since_best = 0;
    } else if (++since_best >= 50) {
      break;  // residual floor reached; the polish decides convergence
    }

    ScalarField dir = fac.solve(r);
    for (std::int64_t i = 0; i < dir.size(); ++i) dir[i] = -dir[i];
    const double slope = dot_quad(r, dir);
    if (!(slope < 0.0)) break;

    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      ScalarField cand = add_scaled(v, alpha, dir);
      bool proj = false;
      const double cand_norm = h1_norm(data.A(), cand);
      if (cand_norm > rho) {
        const double scale = rho / cand_norm;
        for (std::int64_t i = 0; i < cand.size(); ++i) cand[i] *= scale;
        proj = true;
      }
      const double cand_energy = energy_value(cand, data);
      if (cand_energy <= energy_cur + 1e-4 * alpha * slope) {
        v = std::move(cand);
        energy_cur = cand_energy;
        projected_last = proj;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // descent floor; the polish decides convergence
  }

  SolveResult polished = newton_transformed(data, v, newton_tol);
  if (h1_norm(data.A(), polished.v) <= rho) {
    const int base = res.iterations;
    for (IterationRecord rec : polished.log) {
      rec.iteration += base;
      res.log.push_back(rec);
    }
    res.v = std::move(polished.v);
    res.residual_norm = polished.residual_norm;
    res.converged = polished.converged || polished.residual_norm <= tol;
    res.iterations = base + polished.iterations;
    res.jacobian_regularized = polished.jacobian_regularized;
    projected_last = false;
  } else {
    res.converged = res.residual_norm <= tol;
    res.projection_active = true;
  }
  if (projected_last) res.projection_active = true;

  if (res.projection_active && !res.converged)
    throw solver_error("ball projection active at termination: the radius rho is too small "
                       "to contain the local minimum");

  res.energy = energy_value(res.v, data);
  res.min_v = min_value(res.v);
  const bool forced = lp_norm(data.f(), 2.0) > 0.0;
  if (res.energy > 0.0 || (forced && !(res.energy < 0.0)))
    throw solver_error("local minimization ended above the expected energy level (I = " +
                       format_double(res.energy) + ")");
  return res;
}

}  // namespace ncelab
