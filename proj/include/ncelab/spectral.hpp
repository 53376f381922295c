#pragma once

#include <algorithm>
#include <cmath>

#include "ncelab/assemble.hpp"
#include "ncelab/errors.hpp"
#include "ncelab/grid.hpp"
#include "ncelab/rng.hpp"

namespace ncelab {
namespace detail {

inline double pencil_rayleigh(const ScalarField& h, const MatrixField& A, const ScalarField& x) {
  double num = 0.0;
  for (std::int64_t i = 0; i < x.size(); ++i) num += h[i] * x[i] * x[i];
  const double den = h1_seminorm_sq(A, x) / x.grid().cell_volume();
  return num / den;
}

inline void normalize_euclidean(ScalarField& x) {
  double s = 0.0;
  for (std::int64_t i = 0; i < x.size(); ++i) s += x[i] * x[i];
  s = std::sqrt(s);
  if (s == 0.0) throw internal_error("eigenvector iterate collapsed to zero");
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] /= s;
}

inline ScalarField deterministic_start(const Grid& g, std::uint64_t seed) {
  Rng rng(seed);
  ScalarField x(g);
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.01 * rng.symmetric();
  return x;
}

/// Smallest eigenvalue of the SPD operator L_A (nodal, no quadrature factor),
/// by power iteration on the factored inverse. Accuracy only needs to
/// support a spectral-radius bound, so the tolerance is modest.
inline double operator_min_eigenvalue(const SobolevSolver& fac, const MatrixField& A) {
  ScalarField x = deterministic_start(A.grid(), 0x6e63656c61620001ull);
  normalize_euclidean(x);
  double inv_prev = 0.0;
  for (int k = 0; k < 2000; ++k) {
    ScalarField y = fac.solve(x);
    double xy = 0.0;
    for (std::int64_t i = 0; i < x.size(); ++i) xy += x[i] * y[i];
    if (std::abs(xy - inv_prev) <= 1e-8 * std::max(1.0, std::abs(xy)) && k > 2) {
      inv_prev = xy;
      break;
    }
    inv_prev = xy;
    x = std::move(y);
    normalize_euclidean(x);
  }
  if (!(inv_prev > 0.0)) throw internal_error("elliptic operator lost positive definiteness");
  return 1.0 / inv_prev;
}

}  // namespace detail

/// Largest eigenvalue nu_max of the pencil diag(h) x = nu L_A x, equal to
/// sup over v != 0 of (integral of h v^2) / (integral of <A grad v, grad v>).
/// Shifted power iteration (the shift clears any dominant negative end of
/// the spectrum) polished by a few Rayleigh-quotient iterations.
inline double pencil_top_eigenvalue(const MatrixField& A, const ScalarField& h,
                                    double tol = 1e-10, int max_iter = 10000) {
  require_same_grid(A.grid(), h.grid());
  double h_min = 0.0, h_max = 0.0;
  for (std::int64_t i = 0; i < h.size(); ++i) {
    h_min = std::min(h_min, h[i]);
    h_max = std::max(h_max, h[i]);
  }
  if (h_min == 0.0 && h_max == 0.0) return 0.0;

  SobolevSolver fac(A);
  double sigma = 0.0;
  if (h_min < 0.0) {
    const double lam1 = detail::operator_min_eigenvalue(fac, A);
    sigma = 1.05 * (-h_min) / (0.9 * lam1);
  }

  ScalarField x = detail::deterministic_start(A.grid(), 0x6e63656c61620002ull);
  detail::normalize_euclidean(x);
  double q = detail::pencil_rayleigh(h, A, x);
  for (int k = 0; k < max_iter; ++k) {
    ScalarField hx(x.grid());
    for (std::int64_t i = 0; i < x.size(); ++i) hx[i] = h[i] * x[i];
    ScalarField y = fac.solve(hx);
    if (sigma != 0.0)
      for (std::int64_t i = 0; i < y.size(); ++i) y[i] += sigma * x[i];
    detail::normalize_euclidean(y);
    x = std::move(y);
    const double q_new = detail::pencil_rayleigh(h, A, x);
    if (std::abs(q_new - q) <= tol * std::max(1.0, std::abs(q_new)) && k > 2) {
      q = q_new;
      break;
    }
    q = q_new;
  }

  // Rayleigh-quotient polish; a step is accepted only if it does not move
  // the estimate below the power-iteration value (the target is the top of
  // the spectrum, so lower jumps mean a wrong eigenpair).
  const double q_power = q;
  const auto L = assemble_operator(A);
  ScalarField z = x;
  for (int step = 0; step < 4; ++step) {
    Eigen::SparseMatrix<double> M = -q * L;
    for (std::int64_t i = 0; i < h.size(); ++i) M.coeffRef(i, i) += h[i];
    Eigen::VectorXd rhs = L * to_vector(z);
    try {
      LuSolver lu(std::move(M));
      ScalarField znew = from_vector(A.grid(), lu.solve(rhs));
      detail::normalize_euclidean(znew);
      const double q_new = detail::pencil_rayleigh(h, A, znew);
      if (!std::isfinite(q_new)) break;
      z = std::move(znew);
      if (std::abs(q_new - q) <= 1e-15 * std::max(1.0, std::abs(q_new))) {
        q = q_new;
        break;
      }
      q = q_new;
    } catch (const Error&) {
      break;
    }
  }
  if (q < q_power - 1e-8 * std::max(1.0, std::abs(q_power))) q = q_power;
  return q;
}

/// Coercivity constant lambda(h) = inf E_h(v) / ||v||_A^2 = 1 - nu_max.
/// Exactly 1 when h vanishes identically.
inline double coercivity_lambda(const MatrixField& A, const ScalarField& h,
                                double tol = 1e-10, int max_iter = 10000) {
  return 1.0 - pencil_top_eigenvalue(A, h, tol, max_iter);
}

struct DominantMode {
  ScalarField phi;
  double nu;
};

/// Nonnegative dominant mode of the pencil diag(c0) x = nu L_A x for
/// c0 >= 0, c0 not identically zero: the field concentrating where c0 is
/// largest, normalized to ||phi||_A = 1. Negative entries from cross-term
/// stencils are clamped to zero before normalization.
inline DominantMode dominant_weighted_mode(const MatrixField& A, const ScalarField& c0,
                                           double tol = 1e-10, int max_iter = 10000) {
  require_same_grid(A.grid(), c0.grid());
  bool any = false;
  for (std::int64_t i = 0; i < c0.size(); ++i) {
    if (c0[i] < 0.0) throw internal_error("dominant_weighted_mode needs c0 >= 0");
    if (c0[i] > 0.0) any = true;
  }
  if (!any) throw geometry_error("weight c0 vanishes identically: no concentration mode exists");

  SobolevSolver fac(A);
  ScalarField x = detail::deterministic_start(A.grid(), 0x6e63656c61620003ull);
  detail::normalize_euclidean(x);
  double q = detail::pencil_rayleigh(c0, A, x);
  for (int k = 0; k < max_iter; ++k) {
    ScalarField cx(x.grid());
    for (std::int64_t i = 0; i < x.size(); ++i) cx[i] = c0[i] * x[i];
    ScalarField y = fac.solve(cx);
    detail::normalize_euclidean(y);
    x = std::move(y);
    const double q_new = detail::pencil_rayleigh(c0, A, x);
    if (std::abs(q_new - q) <= tol * std::max(1.0, std::abs(q_new)) && k > 2) {
      q = q_new;
      break;
    }
    q = q_new;
  }

  // The iteration converges to the one-signed mode with an arbitrary global
  // sign; orient it positive before the clamp so the clamp only removes
  // numerical undershoot rather than the whole profile.
  std::int64_t peak = 0;
  for (std::int64_t i = 0; i < x.size(); ++i)
    if (std::abs(x[i]) > std::abs(x[peak])) peak = i;
  if (x[peak] < 0.0)
    for (std::int64_t i = 0; i < x.size(); ++i) x[i] = -x[i];
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] = std::max(0.0, x[i]);
  const double norm = h1_norm(A, x);
  if (!(norm > 0.0))
    throw geometry_error("concentration mode collapsed after clamping to nonnegative values");
  for (std::int64_t i = 0; i < x.size(); ++i) x[i] /= norm;
  double overlap = 0.0;
  for (std::int64_t i = 0; i < x.size(); ++i) overlap += c0[i] * x[i];
  if (!(overlap > 0.0))
    throw geometry_error("concentration mode does not overlap the weight c0");
  return {std::move(x), q};
}

}  // namespace ncelab
