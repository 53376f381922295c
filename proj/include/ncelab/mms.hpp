#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "ncelab/general.hpp"
#include "ncelab/grid.hpp"
#include "ncelab/problem.hpp"

namespace ncelab {

inline constexpr double pi = 3.141592653589793;

/// Manufactured solution u*(x) = amplitude * prod_d sin(wave_d pi x_d / L_d):
/// zero on the boundary at any wave numbers, with every derivative in closed
/// form.
struct MmsStar {
  int dim = 1;
  std::array<int, 3> wave{1, 1, 1};
  double amplitude = 1.0;
  std::array<double, 3> lengths{1.0, 1.0, 1.0};

  double frequency(int d) const { return wave[d] * pi / lengths[d]; }

  double value(const std::array<double, 3>& x) const {
    double v = amplitude;
    for (int d = 0; d < dim; ++d) v *= std::sin(frequency(d) * x[d]);
    return v;
  }

  double derivative(const std::array<double, 3>& x, int d) const {
    double v = amplitude;
    for (int e = 0; e < dim; ++e) {
      const double t = frequency(e) * x[e];
      v *= (e == d) ? frequency(e) * std::cos(t) : std::sin(t);
    }
    return v;
  }

  double second(const std::array<double, 3>& x, int d, int e) const {
    if (d == e) {
      const double k = frequency(d);
      return -k * k * value(x);
    }
    double v = amplitude;
    for (int o = 0; o < dim; ++o) {
      const double t = frequency(o) * x[o];
      v *= (o == d || o == e) ? frequency(o) * std::cos(t) : std::sin(t);
    }
    return v;
  }
};

inline ScalarField mms_exact(const Grid& g, const MmsStar& star) {
  ScalarField out(g);
  std::array<int, 3> m{0, 0, 0};
  for (std::int64_t i = 0; i < g.size(); ++i) {
    out[i] = star.value(g.coords(m));
    g.advance(m);
  }
  return out;
}

inline void mms_require_constant(const MatrixField& A) {
  for (int d = 0; d < A.grid().dim(); ++d) {
    for (int e = d; e < A.grid().dim(); ++e) {
      double lo = A.entry(0, d, e), hi = lo;
      for (std::int64_t i = 1; i < A.grid().size(); ++i) {
        lo = std::min(lo, A.entry(i, d, e));
        hi = std::max(hi, A.entry(i, d, e));
      }
      if (hi - lo > 1e-12 * (1.0 + std::abs(hi)))
        throw config_error("manufactured solutions need a constant coefficient matrix A");
    }
  }
}

/// Forcing that makes u* solve -div(A grad u) = c0 u + mu(x) <A grad u,
/// grad u> + f exactly (constant A, so -div(A grad u*) = -sum A_de d_d d_e u*).
inline ScalarField mms_forcing(const Grid& g, const MmsStar& star, const MatrixField& A,
                               const ScalarField& c0, const GradientCoupling& coupling) {
  mms_require_constant(A);
  const int N = g.dim();
  ScalarField out(g);
  std::array<int, 3> m{0, 0, 0};
  for (std::int64_t i = 0; i < g.size(); ++i) {
    const std::array<double, 3> x = g.coords(m);
    double diffusion = 0.0;
    double grad[3] = {0.0, 0.0, 0.0};
    for (int d = 0; d < N; ++d) {
      grad[d] = star.derivative(x, d);
      for (int e = 0; e < N; ++e) diffusion -= A.entry(i, d, e) * star.second(x, d, e);
    }
    double grad_sq = 0.0;
    for (int d = 0; d < N; ++d)
      for (int e = 0; e < N; ++e) grad_sq += A.entry(i, d, e) * grad[d] * grad[e];
    out[i] = diffusion - c0[i] * star.value(x) - coupling.at(i) * grad_sq;
    g.advance(m);
  }
  return out;
}

struct MmsLevel {
  std::vector<int> counts;
  double h_max = 0.0;
  double error = 0.0;  // sup norm against u* at the nodes
  int iterations = 0;
};

struct MmsOutcome {
  std::vector<MmsLevel> levels;
  std::vector<double> orders;  // between consecutive levels
};

/// Grid-refinement study: for each level, the factory supplies (A, c0, mu, p)
/// on that grid (its f is ignored), the forcing is manufactured from u*, the
/// full equation is solved by damped Newton in the original variable, and the
/// nodal sup error against u* is recorded together with observed orders.
inline MmsOutcome mms_convergence(const std::function<ProblemData(const Grid&)>& make,
                                  const MmsStar& star,
                                  const std::vector<std::vector<int>>& level_counts,
                                  double tol = 1e-11) {
  if (level_counts.size() < 2)
    throw config_error("a convergence study needs at least two grid levels");
  MmsOutcome out;
  for (const std::vector<int>& counts : level_counts) {
    std::vector<double> lengths(counts.size());
    for (std::size_t d = 0; d < counts.size(); ++d) lengths[d] = star.lengths[d];
    const Grid g = Grid::from_lengths(counts, lengths);
    if (g.dim() != star.dim)
      throw config_error("grid dimension does not match the manufactured solution");
    const ProblemData base = make(g);
    const ProblemData data =
        base.with_f(mms_forcing(g, star, base.A(), base.c0(), base.coupling()));

    GeneralH model;
    ScalarField zero(g);
    SolveResult sol = newton_direct(data, model, zero, nullptr, nullptr, tol, 100);
    if (!sol.converged)
      throw solver_error("manufactured-solution solve stalled at scaled residual " +
                         format_double(sol.residual_norm) + " on the " +
                         std::to_string(g.size()) + "-node level");

    const ScalarField exact = mms_exact(g, star);
    MmsLevel level;
    level.counts = counts;
    for (int d = 0; d < g.dim(); ++d) level.h_max = std::max(level.h_max, g.spacing(d));
    for (std::int64_t i = 0; i < g.size(); ++i)
      level.error = std::max(level.error, std::abs(sol.v[i] - exact[i]));
    level.iterations = sol.iterations;
    out.levels.push_back(std::move(level));
  }
  for (std::size_t k = 1; k < out.levels.size(); ++k) {
    const MmsLevel& a = out.levels[k - 1];
    const MmsLevel& b = out.levels[k];
    out.orders.push_back(std::log(a.error / b.error) / std::log(a.h_max / b.h_max));
  }
  return out;
}

}  // namespace ncelab
