#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <utility>

#include "ncelab/errors.hpp"
#include "ncelab/grid.hpp"

namespace ncelab {

/// Gradient-term coupling: either a single nonzero scalar mu or a nodal field
/// mu(x) with declared bounds 0 < mu1 <= mu(x) <= mu2.
class GradientCoupling {
 public:
  static GradientCoupling constant(double mu) {
    if (mu == 0.0 || !std::isfinite(mu))
      throw config_error("gradient coupling mu must be a nonzero finite number");
    GradientCoupling c;
    c.mu_ = mu;
    return c;
  }

  static GradientCoupling field(ScalarField values, double mu1, double mu2) {
    if (!(mu1 > 0.0) || !(mu2 >= mu1))
      throw config_error("variable coupling needs declared bounds 0 < mu1 <= mu2");
    for (std::int64_t i = 0; i < values.size(); ++i) {
      if (!(values[i] >= mu1) || !(values[i] <= mu2))
        throw config_error("coupling field leaves the declared bounds [mu1, mu2] at node " +
                           std::to_string(i));
    }
    GradientCoupling c;
    c.field_ = std::move(values);
    c.mu1_ = mu1;
    c.mu2_ = mu2;
    return c;
  }

  bool is_field() const { return field_.has_value(); }

  double scalar() const {
    if (is_field()) throw internal_error("scalar() called on a field-valued coupling");
    return mu_;
  }

  double lower() const { return is_field() ? mu1_ : std::abs(mu_); }
  double upper() const { return is_field() ? mu2_ : std::abs(mu_); }

  double at(std::int64_t i) const { return is_field() ? (*field_)[i] : mu_; }

  const ScalarField& values() const {
    if (!is_field()) throw internal_error("values() called on a scalar coupling");
    return *field_;
  }

 private:
  GradientCoupling() = default;
  double mu_ = 0.0;
  std::optional<ScalarField> field_;
  double mu1_ = 0.0, mu2_ = 0.0;
};

namespace detail {

inline void require_positive_mu(double mu) {
  if (!(mu > 0.0)) throw config_error("nonlinearity functions require mu > 0");
}

/// Derivative cap used at the kink s = -1/mu, where ln(1+mu s) diverges.
inline constexpr double g_prime_cap = 1e6;

/// Below this threshold on w = 1+mu s the closed forms degenerate to
/// 0*ln(0); the limit values are used instead.
inline constexpr double w_limit = 1e-8;

/// Below this threshold on |mu s| the closed forms lose digits to
/// cancellation; truncated power series take over.
inline constexpr double t_series = 0.05;

}  // namespace detail

/// g(s) = (1/mu)(1+mu s)ln(1+mu s) - s for s > -1/mu, and -s otherwise.
/// Continuous, nonnegative, zero only at s = 0.
inline double g(double s, double mu) {
  detail::require_positive_mu(mu);
  if (s <= -1.0 / mu) return -s;
  const double t = mu * s;
  const double w = 1.0 + t;
  if (w < detail::w_limit) return -s;
  if (std::abs(t) < detail::t_series) {
    // g = mu s^2 sum_k (-t)^k / ((k+1)(k+2))
    const double x = -t;
    double p = 1.0 / (13.0 * 14.0);
    for (int k = 12; k >= 1; --k) p = 1.0 / (static_cast<double>(k) * (k + 1)) + x * p;
    return mu * s * s * p;
  }
  return (w * std::log1p(t)) / mu - s;
}

/// g'(s) = ln(1+mu s) for s > -1/mu and -1 for s < -1/mu; the kink itself
/// returns the capped value -1e6 (g is only C0 there, the cap keeps Newton
/// Jacobians finite).
inline double g_prime(double s, double mu) {
  detail::require_positive_mu(mu);
  const double kink = -1.0 / mu;
  if (s < kink) return -1.0;
  if (s == kink) return -detail::g_prime_cap;
  const double t = mu * s;
  if (1.0 + t <= 0.0) return -detail::g_prime_cap;
  return std::max(std::log1p(t), -detail::g_prime_cap);
}

/// G(s) = integral of g from 0 to s, in closed form. Piecewise, continuous
/// and C1 at s = -1/mu, G(0) = 0.
inline double G(double s, double mu) {
  detail::require_positive_mu(mu);
  const double lower_value = 1.0 / (4.0 * mu * mu) - 0.5 * s * s;
  if (s <= -1.0 / mu) return lower_value;
  const double t = mu * s;
  const double w = 1.0 + t;
  if (w < detail::w_limit) return lower_value;
  if (std::abs(t) < detail::t_series) {
    // G = mu s^3 sum_k (-t)^k / ((k+1)(k+2)(k+3))
    const double x = -t;
    double p = 1.0 / (12.0 * 13.0 * 14.0);
    for (int k = 11; k >= 1; --k)
      p = 1.0 / (static_cast<double>(k) * (k + 1) * (k + 2)) + x * p;
    return mu * s * s * s * p;
  }
  return (w * w * (2.0 * std::log1p(t) - 1.0) + 1.0) / (4.0 * mu * mu) - 0.5 * s * s;
}

/// H(s) = (1/2) g(s) s - G(s); constant on s <= -1/mu with value
/// -G(-1/mu) - 1/(2 mu^2) = -1/(4 mu^2), returned exactly there.
inline double H(double s, double mu) {
  detail::require_positive_mu(mu);
  const double constant_value = -1.0 / (4.0 * mu * mu);
  if (s <= -1.0 / mu) return constant_value;
  const double t = mu * s;
  const double w = 1.0 + t;
  if (w < detail::w_limit) return constant_value;
  if (std::abs(t) < detail::t_series) {
    // H = (mu s^3 / 2) sum_k (-t)^k / ((k+2)(k+3))
    const double x = -t;
    double p = 1.0 / (14.0 * 15.0);
    for (int k = 12; k >= 1; --k) p = 1.0 / (static_cast<double>(k + 1) * (k + 2)) + x * p;
    return 0.5 * mu * s * s * s * p;
  }
  return (w * w - 1.0 - 2.0 * w * std::log1p(t)) / (4.0 * mu * mu);
}

/// Inverse change of unknown u = (1/mu) ln(1 + mu v). Requires every node to
/// satisfy v > -1/mu strictly; a violation means the lower-bound certificate
/// failed, so it is reported as a certificate error.
inline ScalarField v_to_u(const ScalarField& v, double mu) {
  detail::require_positive_mu(mu);
  ScalarField u(v.grid());
  const double kink = -1.0 / mu;
  for (std::int64_t i = 0; i < v.size(); ++i) {
    const double t = mu * v[i];
    if (v[i] <= kink || 1.0 + t <= 0.0)
      throw certificate_error("change of unknown undefined: v <= -1/mu at node " +
                              std::to_string(i) + " (v = " + format_double(v[i]) + ")");
    u[i] = std::log1p(t) / mu;
  }
  return u;
}

/// Change of unknown v = (e^{mu u} - 1)/mu. The result always satisfies
/// v > -1/mu; overflow for extreme mu*u is reported, never saturated.
inline ScalarField u_to_v(const ScalarField& u, double mu) {
  detail::require_positive_mu(mu);
  ScalarField v(u.grid());
  for (std::int64_t i = 0; i < u.size(); ++i) {
    const double e = std::expm1(mu * u[i]);
    if (!std::isfinite(e))
      throw solver_error("change of unknown overflow: exp(mu u) not finite at node " +
                         std::to_string(i) + " (u = " + format_double(u[i]) + ")");
    v[i] = e / mu;
  }
  return v;
}

/// Nodal map of g over a field with per-node coupling.
inline ScalarField g_field(const ScalarField& v, const GradientCoupling& mu) {
  ScalarField out(v.grid());
  for (std::int64_t i = 0; i < v.size(); ++i) out[i] = g(v[i], mu.at(i));
  return out;
}

}  // namespace ncelab
