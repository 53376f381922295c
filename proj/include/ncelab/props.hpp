#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ncelab/energy.hpp"
#include "ncelab/nonlinearity.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/rng.hpp"
#include "ncelab/shapes.hpp"

namespace ncelab {

struct PropRow {
  std::string name;
  double worst = 0.0;   // most adverse sampled value, sign convention per row
  double limit = 0.0;   // bound the worst value must stay on the right side of
  bool pass = false;
};

struct PropsOutcome {
  std::vector<PropRow> rows;
  bool all_pass = true;

  void add(PropRow row) {
    all_pass = all_pass && row.pass;
    rows.push_back(std::move(row));
  }
};

namespace props_detail {

inline std::vector<double> log_magnitudes(double lo, double hi, int per_decade) {
  std::vector<double> out;
  const double decades = std::log10(hi / lo);
  const int n = static_cast<int>(decades * per_decade) + 1;
  for (int k = 0; k <= n; ++k)
    out.push_back(lo * std::pow(10.0, decades * k / n));
  return out;
}

inline const std::vector<double>& mu_samples() {
  static const std::vector<double> mus{0.5, 1.0, 2.0};
  return mus;
}

}  // namespace props_detail

/// g vanishes only at the origin and is positive everywhere else.
inline PropRow prop_positivity() {
  PropRow row{"positivity of g", 1e300, 0.0, false};
  bool origin_ok = true;
  for (double mu : props_detail::mu_samples()) {
    origin_ok = origin_ok && g(0.0, mu) == 0.0;
    for (double m : props_detail::log_magnitudes(1e-8, 1e6, 10)) {
      row.worst = std::min(row.worst, g(m, mu));
      row.worst = std::min(row.worst, g(-m, mu));
    }
  }
  row.pass = origin_ok && row.worst > 0.0;
  return row;
}

/// |g(s)| / |s|^{3/2} stays bounded over the sample grid.
inline PropRow prop_growth() {
  PropRow row{"growth bound of g", 0.0, 1e3, false};
  for (double mu : props_detail::mu_samples())
    for (double m : props_detail::log_magnitudes(1e-8, 1e6, 10)) {
      row.worst = std::max(row.worst, std::abs(g(m, mu)) / std::pow(m, 1.5));
      row.worst = std::max(row.worst, std::abs(g(-m, mu)) / std::pow(m, 1.5));
    }
  row.pass = std::isfinite(row.worst) && row.worst < row.limit;
  return row;
}

/// |g(s)/s| decays through {1e-1, 1e-2, 1e-3} and sits below 1e-2 at the end.
inline PropRow prop_small_s_decay() {
  const double r1 = std::abs(g(1e-1, 1.0) / 1e-1);
  const double r2 = std::abs(g(1e-2, 1.0) / 1e-2);
  const double r3 = std::abs(g(1e-3, 1.0) / 1e-3);
  PropRow row{"small-s decay of g/s", r3, 1e-2, false};
  row.pass = r1 > r2 && r2 > r3 && r3 < 1e-2;
  return row;
}

/// g(s)/s and G(s)/s^2 both increase strictly through {10, 1e3, 1e5}.
inline PropRow prop_superlinearity() {
  PropRow row{"superlinear ratios", 1e300, 0.0, false};
  bool ok = true;
  const double s[3] = {10.0, 1e3, 1e5};
  for (double mu : props_detail::mu_samples()) {
    double a_prev = -1e300, b_prev = -1e300;
    for (double si : s) {
      const double a = g(si, mu) / si;
      const double b = G(si, mu) / (si * si);
      row.worst = std::min(row.worst, std::min(a - a_prev, b - b_prev));
      ok = ok && a > a_prev && b > b_prev;
      a_prev = a;
      b_prev = b;
    }
  }
  row.pass = ok;
  return row;
}

/// H(s) <= (s/t) H(t) on sampled 0 <= s <= t, and H is exactly constant
/// at and below the kink.
inline PropRow prop_scaling() {
  PropRow row{"scaling inequality of H", 0.0, 0.0, false};
  bool ok = true;
  const std::vector<double> ts{0.0, 1e-3, 1e-1, 1.0, 5.0, 10.0, 100.0, 1e3};
  for (double mu : props_detail::mu_samples()) {
    for (std::size_t i = 0; i < ts.size(); ++i)
      for (std::size_t j = i; j < ts.size(); ++j) {
        const double s = ts[i], t = ts[j];
        if (t == 0.0) continue;
        const double gap = H(s, mu) - (s / t) * H(t, mu);
        row.worst = std::max(row.worst, gap);
        ok = ok && gap <= 0.0;
      }
    const double floor = H(-1.0 / mu, mu);
    for (double s : {-1.0 / mu, -1.0 / mu - 0.5, -2.0 / mu, -10.0 / mu})
      ok = ok && H(s, mu) == floor;
  }
  row.pass = ok;
  return row;
}

/// Central differences of g match g_prime at second order away from the kink,
/// and central differences of G match g the same way.
inline PropRow prop_derivative_consistency() {
  PropRow row{"derivative consistency", 0.0, 1.0, false};
  bool ok = true;
  auto second_order = [&](auto&& fn, auto&& dfn, double s) {
    auto central = [&](double eps) {
      return std::abs((fn(s + eps) - fn(s - eps)) / (2.0 * eps) - dfn(s));
    };
    const double coarse = central(1e-3);
    const double fine = central(1e-4);
    const double allowance = coarse / 25.0 + 1e-11;
    row.worst = std::max(row.worst, fine / allowance);
    ok = ok && fine <= allowance;
  };
  for (double mu : props_detail::mu_samples()) {
    for (double s : {-0.9 / mu, -0.4 / mu, 0.3, 1.0, 2.0, 5.0}) {
      second_order([&](double x) { return g(x, mu); },
                   [&](double x) { return g_prime(x, mu); }, s);
      second_order([&](double x) { return G(x, mu); },
                   [&](double x) { return g(x, mu); }, s);
    }
  }
  row.pass = ok;
  return row;
}

/// Directional derivatives of I agree with the assembled nodal gradient on a
/// small 2D problem, and the mismatch shrinks at second order in the step.
inline PropRow prop_gradient_consistency(std::uint64_t seed) {
  const Grid grid({17, 17}, {1.0 / 18.0, 1.0 / 18.0});
  ShapeSpec bump;
  bump.kind = ShapeSpec::Kind::gaussian_bump;
  bump.center = {0.5, 0.5, 0.0};
  bump.width = 0.2;
  bump.amplitude = 0.5;
  ShapeSpec sine;
  sine.kind = ShapeSpec::Kind::sine_product;
  sine.amplitude = 0.1;
  const ProblemData data(MatrixField::identity(grid), sample_shape(grid, bump),
                         sample_shape(grid, sine), GradientCoupling::constant(1.0), 2.0);

  PropRow row{"energy gradient consistency", 0.0, 1.0, false};
  bool ok = true;
  Rng rng(seed ^ 0x6e63656c61626772ULL);
  for (int trial = 0; trial < 20; ++trial) {
    ScalarField v(grid), phi(grid);
    for (std::int64_t i = 0; i < grid.size(); ++i) {
      // Moderate amplitude keeps |I| near 1 so the cubic truncation term of
      // the central difference stays visible above its rounding floor.
      v[i] = 0.05 * rng.symmetric();
      phi[i] = rng.symmetric();
    }
    const double base = energy_value(v, data);
    const ScalarField r = energy_gradient(v, data);
    const double pairing = dot_quad(r, phi);
    auto central = [&](double eps) {
      const ScalarField plus = add_scaled(v, eps, phi);
      const ScalarField minus = add_scaled(v, -eps, phi);
      return std::abs((energy_value(plus, data) - energy_value(minus, data)) / (2.0 * eps) -
                      pairing);
    };
    const double coarse = central(1e-3);
    const double fine = central(1e-4);
    const double tol = 1e-6 * (1.0 + std::abs(base));
    row.worst = std::max(row.worst, fine / tol);
    // The second-order reduction is observed between steps that both sit
    // above the rounding floor of the difference quotient.
    ok = ok && fine <= tol && fine <= coarse / 25.0 + 1e-11 * (1.0 + std::abs(base));
  }
  row.pass = ok;
  return row;
}

inline PropsOutcome run_property_suites(std::uint64_t seed) {
  PropsOutcome out;
  out.add(prop_positivity());
  out.add(prop_growth());
  out.add(prop_small_s_decay());
  out.add(prop_superlinearity());
  out.add(prop_scaling());
  out.add(prop_derivative_consistency());
  out.add(prop_gradient_consistency(seed));
  return out;
}

}  // namespace ncelab
