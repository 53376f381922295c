#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "ncelab/errors.hpp"
#include "ncelab/grid.hpp"
#include "ncelab/nonlinearity.hpp"

namespace ncelab {

/// One problem instance: -div(A grad u) = c0 u + mu <A grad u, grad u> + f
/// on the grid's box with zero Dirichlet data, plus the control exponent p
/// used by the hypothesis checker's norms.
class ProblemData {
 public:
  ProblemData(MatrixField A, ScalarField c0, ScalarField f, GradientCoupling coupling, double p)
      : A_(std::move(A)),
        c0_(std::move(c0)),
        f_(std::move(f)),
        coupling_(std::move(coupling)),
        p_(p) {
    require_same_grid(A_.grid(), c0_.grid());
    require_same_grid(A_.grid(), f_.grid());
    if (coupling_.is_field()) require_same_grid(A_.grid(), coupling_.values().grid());
    for (std::int64_t i = 0; i < c0_.size(); ++i)
      if (!std::isfinite(c0_[i]) || !std::isfinite(f_[i]))
        throw config_error("coefficient fields must be finite at every node");
    const int N = grid().dim();
    if (N == 3 ? !(p_ > 1.5) : !(p_ >= 1.5))
      throw config_error(N == 3 ? "control exponent needs p > 3/2 in 3D"
                                : "control exponent needs p >= 1.5");
  }

  const Grid& grid() const { return A_.grid(); }
  const MatrixField& A() const { return A_; }
  const ScalarField& c0() const { return c0_; }
  const ScalarField& f() const { return f_; }
  const GradientCoupling& coupling() const { return coupling_; }
  double p() const { return p_; }

  /// Scalar coupling after sign normalization; throws for field couplings.
  double mu() const { return coupling_.scalar(); }

  bool multiplicity_ready() const {
    if (coupling_.is_field()) return false;
    bool nonzero = false;
    for (std::int64_t i = 0; i < c0_.size(); ++i) {
      if (c0_[i] < 0.0) return false;
      if (c0_[i] > 0.0) nonzero = true;
    }
    return nonzero;
  }

  /// Structural requirements of the two-solution pipeline: a scalar coupling
  /// and c0 >= 0. A c0 that vanishes identically is structurally fine here;
  /// it surfaces later as a mountain-geometry failure (no concentration mode
  /// to climb), not as a configuration mistake.
  void require_multiplicity_mode() const {
    if (coupling_.is_field())
      throw config_error("multiplicity mode requires a constant coupling mu");
    for (std::int64_t i = 0; i < c0_.size(); ++i)
      if (c0_[i] < 0.0)
        throw config_error("multiplicity mode requires c0 >= 0 at every node");
  }

  ProblemData with_c0(ScalarField c0) const {
    return ProblemData(A_, std::move(c0), f_, coupling_, p_);
  }

  ProblemData with_f(ScalarField f) const {
    return ProblemData(A_, c0_, std::move(f), coupling_, p_);
  }

  ProblemData with_coupling(GradientCoupling c) const {
    return ProblemData(A_, c0_, f_, std::move(c), p_);
  }

 private:
  MatrixField A_;
  ScalarField c0_;
  ScalarField f_;
  GradientCoupling coupling_;
  double p_;
};

/// Zero-order coefficient c0 + mu f of the transformed equation. Scalar
/// coupling only (the change of unknown needs constant mu).
inline ScalarField transformed_zero_order(const ProblemData& data) {
  const double mu = data.mu();
  ScalarField h(data.grid());
  for (std::int64_t i = 0; i < h.size(); ++i) h[i] = data.c0()[i] + mu * data.f()[i];
  return h;
}

/// Weight c0 + mu f^+ whose coercivity eigenvalue gates the whole theory.
/// Uses the nodal coupling value, so it is defined in every mode.
inline ScalarField coercivity_weight(const ProblemData& data) {
  ScalarField h(data.grid());
  for (std::int64_t i = 0; i < h.size(); ++i)
    h[i] = data.c0()[i] + data.coupling().at(i) * std::max(0.0, data.f()[i]);
  return h;
}

struct SignNormalized {
  ProblemData data;
  bool flipped;
};

/// Reduction mu < 0 to mu > 0: replacing u by -u swaps (mu, f) for
/// (-mu, -f). Solutions of the returned problem are negated on output when
/// flipped is set. Field couplings are already positive by construction.
inline SignNormalized sign_normalize(const ProblemData& data) {
  if (data.coupling().is_field()) return {data, false};
  const double mu = data.coupling().scalar();
  if (mu > 0.0) return {data, false};
  ScalarField neg_f(data.grid());
  for (std::int64_t i = 0; i < neg_f.size(); ++i) neg_f[i] = -data.f()[i];
  return {data.with_f(std::move(neg_f)).with_coupling(GradientCoupling::constant(-mu)), true};
}

}  // namespace ncelab
