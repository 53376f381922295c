#pragma once

#include <cmath>

#include "ncelab/assemble.hpp"
#include "ncelab/energy.hpp"
#include "ncelab/grid.hpp"
#include "ncelab/nonlinearity.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/solve_result.hpp"

namespace ncelab {

/// Damped Newton on the nodal residual of the transformed equation, with
/// Jacobian L_A - diag(c0 + mu f) - diag(c0 g'(v)) and Armijo backtracking
/// on (1/2)||r||^2. Terminates at residual_norm <= tol; if the line search
/// cannot improve the residual any further (floating-point floor), the
/// iteration stops where it is and converged reports whether the tolerance
/// was met. A singular Jacobian is retried with a +1e-12 diagonal shift and
/// reported through jacobian_regularized.
inline SolveResult newton_transformed(const ProblemData& data, const ScalarField& v_init,
                                      double tol = 1e-12, int max_iter = 200) {
  require_same_grid(v_init.grid(), data.grid());
  const double mu = data.mu();
  const ScalarField zo = transformed_zero_order(data);
  const auto L = assemble_operator(data.A());

  SolveResult res(v_init, SolveKind::Newton);
  ScalarField& v = res.v;

  for (int k = 0; k < max_iter; ++k) {
    ScalarField r = energy_gradient(v, data);
    const double v_norm = h1_norm(data.A(), v);
    const double rn = scaled_residual_norm(r, v_norm);
    const double phi0 = 0.5 * dot_quad(r, r);
    res.residual_norm = rn;
    res.iterations = k;
    res.log.push_back({k, rn, energy_value(v, data), (1.0 + v_norm) * rn});
    if (!std::isfinite(rn)) throw solver_error("Newton residual is not finite");
    if (rn <= tol) {
      res.converged = true;
      break;
    }

    Eigen::SparseMatrix<double> J = L;
    for (std::int64_t i = 0; i < v.size(); ++i)
      J.coeffRef(i, i) -= zo[i] + data.c0()[i] * g_prime(v[i], mu);
    LuSolver lu(std::move(J));
    if (lu.regularized()) res.jacobian_regularized = true;
    ScalarField d = from_vector(data.grid(), lu.solve(-to_vector(r)));

    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt) {
      ScalarField cand = add_scaled(v, alpha, d);
      ScalarField rc = energy_gradient(cand, data);
      const double phic = 0.5 * dot_quad(rc, rc);
      if (std::isfinite(phic) && phic <= phi0 * (1.0 - 2.0 * 1e-4 * alpha)) {
        v = std::move(cand);
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;  // residual floor reached; rn already recorded
  }

  if (!res.converged && !res.log.empty()) {
    // Re-measure in case the loop exhausted max_iter after a final step.
    ScalarField r = energy_gradient(v, data);
    res.residual_norm = scaled_residual_norm(r, h1_norm(data.A(), v));
    res.converged = res.residual_norm <= tol;
  }
  res.energy = energy_value(v, data);
  res.min_v = min_value(v);
  return res;
}

}  // namespace ncelab
