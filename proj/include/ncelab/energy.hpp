#pragma once

#include <cmath>
#include <utility>
#include <vector>

#include "ncelab/errors.hpp"
#include "ncelab/grid.hpp"
#include "ncelab/nonlinearity.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/spectral.hpp"

namespace ncelab {

struct EnergyBreakdown {
  double quadratic = 0.0;  // (1/2) integral of <A grad v, grad v> - (c0 + mu f) v^2
  double g_term = 0.0;     // integral of c0 G(v)
  double linear = 0.0;     // integral of f v
  double total = 0.0;      // quadratic - g_term - linear
  double residual_norm = 0.0;
};

/// I(v) alone, for hot loops. I(0) = 0 exactly.
inline double energy_value(const ScalarField& v, const ProblemData& data) {
  require_same_grid(v.grid(), data.grid());
  const double mu = data.mu();
  double zero_order = 0.0, g_sum = 0.0, lin = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const double c0 = data.c0()[i];
    const double f = data.f()[i];
    zero_order += (c0 + mu * f) * v[i] * v[i];
    if (c0 != 0.0) g_sum += c0 * G(v[i], mu);
    lin += f * v[i];
  }
  const double vol = v.grid().cell_volume();
  const double total =
      0.5 * (h1_seminorm_sq(data.A(), v) - zero_order * vol) - g_sum * vol - lin * vol;
  if (!std::isfinite(total))
    throw solver_error("energy evaluation produced a non-finite value (field too large)");
  return total;
}

/// Nodal residual of the transformed equation,
/// r = L_A v - (c0 + mu f) v - c0 g(v) - f.
/// Under the quadrature pairing, <r, phi> equals the directional derivative
/// of I at v in direction phi up to stencil round-off.
inline ScalarField energy_gradient(const ScalarField& v, const ProblemData& data) {
  require_same_grid(v.grid(), data.grid());
  const double mu = data.mu();
  ScalarField r = apply_operator(data.A(), v);
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const double c0 = data.c0()[i];
    const double f = data.f()[i];
    r[i] -= (c0 + mu * f) * v[i] + f;
    if (c0 != 0.0) r[i] -= c0 * g(v[i], mu);
  }
  return r;
}

/// Scaled l2 residual: the L2 norm of the nodal residual divided by
/// (1 + ||v||_A). The weight keeps the measure meaningful at the saddle,
/// whose amplitude in the transformed variable can reach e^{1/nu} for
/// concentrated c0; it is also the natural scale in the Cerami diagnostic
/// (1 + ||v||) ||I'(v)||.
inline double scaled_residual_norm(const ScalarField& r, double v_norm) {
  return std::sqrt(dot_quad(r, r)) / (1.0 + v_norm);
}

inline double residual_norm_at(const ScalarField& v, const ProblemData& data) {
  const ScalarField r = energy_gradient(v, data);
  return scaled_residual_norm(r, h1_norm(data.A(), v));
}

/// Full breakdown of I(v) with the residual norm included.
inline EnergyBreakdown energy(const ScalarField& v, const ProblemData& data) {
  require_same_grid(v.grid(), data.grid());
  const double mu = data.mu();
  double zero_order = 0.0, g_sum = 0.0, lin = 0.0;
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const double c0 = data.c0()[i];
    const double f = data.f()[i];
    zero_order += (c0 + mu * f) * v[i] * v[i];
    if (c0 != 0.0) g_sum += c0 * G(v[i], mu);
    lin += f * v[i];
  }
  const double vol = v.grid().cell_volume();
  EnergyBreakdown b;
  b.quadratic = 0.5 * (h1_seminorm_sq(data.A(), v) - zero_order * vol);
  b.g_term = g_sum * vol;
  b.linear = lin * vol;
  b.total = b.quadratic - b.g_term - b.linear;
  if (!std::isfinite(b.total))
    throw solver_error("energy evaluation produced a non-finite value (field too large)");
  b.residual_norm = residual_norm_at(v, data);
  return b;
}

/// I(t v) along a ray, for the geometry diagnostics: I(tv) < 0 for small
/// t > 0 when the linear term pulls down, and I(tv) -> -infinity along
/// nonnegative rays seen by c0.
inline std::vector<std::pair<double, double>> ray_scan(const ScalarField& v,
                                                       const ProblemData& data,
                                                       const std::vector<double>& ts) {
  std::vector<std::pair<double, double>> out;
  out.reserve(ts.size());
  ScalarField tv(v.grid());
  for (double t : ts) {
    if (!std::isfinite(t)) throw config_error("ray scan parameters must be finite");
    for (std::int64_t i = 0; i < v.size(); ++i) tv[i] = t * v[i];
    out.emplace_back(t, energy_value(tv, data));
  }
  return out;
}

/// High field beyond the mountain ridge: a nonnegative field v0 with
/// ||v0||_A > rho and I(v0) <= 0. The bump is the dominant concentration
/// mode of c0 (the profile that makes the G-term overtake the quadratic one
/// soonest). I(t phi) turns negative once nu ln(t) beats the quadratic
/// coefficient, at ln t ~ (1 - q + 1.5 nu - lg)/nu with q = int (c0+mu f)
/// phi^2, nu = int c0 phi^2, lg = int c0 phi^2 ln(mu phi); weak weights push
/// that crossing to astronomic amplitudes, so the doubling starts a few
/// e-folds below the estimated crossing rather than at a fixed scale.
inline ScalarField find_v0(const ProblemData& data, double rho) {
  DominantMode mode = dominant_weighted_mode(data.A(), data.c0());
  ScalarField phi = std::move(mode.phi);
  const Grid& g = phi.grid();
  const double vol = g.cell_volume();
  const double mu = data.mu();
  double q = 0.0, nu = 0.0, lg = 0.0;
  for (std::int64_t i = 0; i < phi.size(); ++i) {
    const double p2 = phi[i] * phi[i];
    q += (data.c0()[i] + mu * data.f()[i]) * p2;
    nu += data.c0()[i] * p2;
    if (data.c0()[i] > 0.0 && phi[i] > 0.0)
      lg += data.c0()[i] * p2 * std::log(mu * phi[i]);
  }
  q *= vol;
  nu *= vol;
  lg *= vol;
  if (!(nu > 0.0))
    throw geometry_error("concentration mode carries no weight: int c0 phi^2 = 0");

  const double ln_crossing = (1.0 - q + 1.5 * nu - lg) / nu;
  double t = std::exp(std::min(ln_crossing - 5.0, 700.0));
  t = std::max(t, 2.0 * rho);  // ||phi||_A = 1, so ||t phi|| = t
  for (int k = 0; k <= 60; ++k) {
    ScalarField cand(g);
    for (std::int64_t i = 0; i < phi.size(); ++i) cand[i] = t * phi[i];
    if (t > rho && energy_value(cand, data) <= 0.0) return cand;
    t *= 2.0;
  }
  throw geometry_error(
      "no high field found: I(t phi) stayed positive up to the doubling cap of 2^60 above "
      "the estimated crossing (c0 too small or too spread out at this resolution)");
}

}  // namespace ncelab
