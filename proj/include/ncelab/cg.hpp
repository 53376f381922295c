#pragma once

#include <cmath>
#include <cstdint>

#include "ncelab/errors.hpp"
#include "ncelab/grid.hpp"

namespace ncelab {

struct CgOutcome {
  ScalarField x;
  int iterations = 0;
  double rel_residual = 0.0;
};

/// Conjugate gradients on (L_A - diag(h)) x = rhs, matrix-free, nodal l2
/// stopping rule ||r|| <= rel_tol * ||rhs||. The operator must be positive
/// definite (coercivity); indefiniteness surfaces as nonpositive curvature
/// and is refused.
inline CgOutcome solve_cg(const MatrixField& A, const ScalarField& h, const ScalarField& rhs,
                          double rel_tol = 1e-12, std::int64_t max_iter = 0) {
  require_same_grid(A.grid(), h.grid());
  require_same_grid(A.grid(), rhs.grid());
  const Grid& g = A.grid();
  const std::int64_t n = g.size();
  if (max_iter <= 0) max_iter = 5 * n + 50;

  auto apply = [&](const ScalarField& x) {
    ScalarField y = apply_operator(A, x);
    for (std::int64_t i = 0; i < n; ++i) y[i] -= h[i] * x[i];
    return y;
  };
  auto dot = [&](const ScalarField& a, const ScalarField& b) {
    double s = 0.0;
    for (std::int64_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
  };

  ScalarField x(g);
  const double b_norm = std::sqrt(dot(rhs, rhs));
  if (b_norm == 0.0) return {x, 0, 0.0};

  ScalarField r = rhs;
  ScalarField p = r;
  double rr = dot(r, r);
  const double stop = rel_tol * b_norm;

  for (std::int64_t k = 0; k < max_iter; ++k) {
    if (std::sqrt(rr) <= stop) return {x, static_cast<int>(k), std::sqrt(rr) / b_norm};
    ScalarField Ap = apply(p);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0))
      throw solver_error("linear operator is not positive definite (nonpositive curvature "
                         "encountered); the coercivity precondition fails for this weight");
    const double alpha = rr / pAp;
    for (std::int64_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    const double rr_new = dot(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::int64_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
  }
  if (std::sqrt(rr) <= stop)
    return {x, static_cast<int>(max_iter), std::sqrt(rr) / b_norm};
  throw solver_error("conjugate gradients stagnated: relative residual " +
                     format_double(std::sqrt(rr) / b_norm) + " after " +
                     std::to_string(max_iter) + " iterations");
}

}  // namespace ncelab
