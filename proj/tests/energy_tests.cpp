#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ncelab/config.hpp"
#include "ncelab/energy.hpp"
#include "ncelab/pipeline.hpp"
#include "ncelab/problem.hpp"
#include "ncelab/props.hpp"
#include "oracles.hpp"

using ncelab::Grid;
using ncelab::MatrixField;
using ncelab::ProblemData;
using ncelab::ScalarField;

namespace {

// 1d, three nodes, h = 1/4, A = I, c0 = 0, f = 1, mu = 1, v = (0, 1, 0).
ProblemData hand_problem() {
  Grid g({3}, {0.25});
  return ProblemData(MatrixField::identity(g), ScalarField(g), oracle::constant_field(g, 1.0),
                     ncelab::GradientCoupling::constant(1.0), 2.0);
}

ScalarField hand_v() {
  Grid g({3}, {0.25});
  ScalarField v(g);
  v[1] = 1.0;
  return v;
}

ProblemData fixture_problem() {
  ncelab::ExperimentConfig cfg = ncelab::load_config(std::string(NCELAB_SOURCE_DIR) +
                                                     "/configs/multiplicity2d.json");
  return ncelab::build_problem(cfg);
}

}  // namespace

TEST(Energy, HandValue) {
  EXPECT_DOUBLE_EQ(ncelab::energy_value(hand_v(), hand_problem()), 3.625);
}

TEST(Energy, BreakdownSplitsTheHandValue) {
  ncelab::EnergyBreakdown b = ncelab::energy(hand_v(), hand_problem());
  EXPECT_DOUBLE_EQ(b.quadratic, 3.875);
  EXPECT_DOUBLE_EQ(b.g_term, 0.0);
  EXPECT_DOUBLE_EQ(b.linear, 0.25);
  EXPECT_DOUBLE_EQ(b.total, 3.625);
  EXPECT_GT(b.residual_norm, 0.0);
}

TEST(Energy, HandGradient) {
  ScalarField r = ncelab::energy_gradient(hand_v(), hand_problem());
  EXPECT_DOUBLE_EQ(r[0], -17.0);
  EXPECT_DOUBLE_EQ(r[1], 30.0);
  EXPECT_DOUBLE_EQ(r[2], -17.0);
}

TEST(Energy, ZeroFieldHasZeroEnergy) {
  ProblemData data = hand_problem();
  EXPECT_DOUBLE_EQ(ncelab::energy_value(ScalarField(data.grid()), data), 0.0);
}

TEST(Energy, ScaledResidualUsesTheCeramiWeight) {
  ProblemData data = hand_problem();
  ScalarField v = hand_v();
  ScalarField r = ncelab::energy_gradient(v, data);
  const double raw = ncelab::lp_norm(r, 2.0);
  const double vn = ncelab::h1_norm(data.A(), v);
  EXPECT_DOUBLE_EQ(ncelab::scaled_residual_norm(r, vn), raw / (1.0 + vn));
  EXPECT_DOUBLE_EQ(vn, std::sqrt(8.0));
  EXPECT_DOUBLE_EQ(raw, std::sqrt((289.0 + 900.0 + 289.0) * 0.25));
}

TEST(Energy, GradientMatchesCentralDifferences) {
  // 20 direction pairs on a 17x17 grid; the fine step must land within
  // 1e-6 (1 + |I|) and show the quadratic reduction from the coarse step.
  ncelab::PropRow row = ncelab::prop_gradient_consistency(0);
  EXPECT_TRUE(row.pass);
  EXPECT_LE(row.worst, 1.0);
}

TEST(Energy, RayScanEvaluatesTheRay) {
  ProblemData data = hand_problem();
  ScalarField v = hand_v();
  const auto scan = ncelab::ray_scan(v, data, {0.0, 1.0, 2.0});
  ASSERT_EQ(scan.size(), 3u);
  EXPECT_DOUBLE_EQ(scan[0].first, 0.0);
  EXPECT_DOUBLE_EQ(scan[0].second, 0.0);
  EXPECT_DOUBLE_EQ(scan[1].second, 3.625);
  ScalarField v2 = add_scaled(v, 1.0, v);
  EXPECT_DOUBLE_EQ(scan[2].second, ncelab::energy_value(v2, data));
}

TEST(Energy, SignNormalizeFlipsNegativeCoupling) {
  Grid g({3}, {0.25});
  ProblemData raw(MatrixField::identity(g), ScalarField(g), oracle::constant_field(g, 1.0),
                  ncelab::GradientCoupling::constant(-1.0), 2.0);
  ncelab::SignNormalized norm = ncelab::sign_normalize(raw);
  EXPECT_TRUE(norm.flipped);
  EXPECT_DOUBLE_EQ(norm.data.mu(), 1.0);
  for (std::int64_t i = 0; i < g.size(); ++i) EXPECT_DOUBLE_EQ(norm.data.f()[i], -1.0);

  ProblemData pos(MatrixField::identity(g), ScalarField(g), oracle::constant_field(g, 1.0),
                  ncelab::GradientCoupling::constant(1.0), 2.0);
  EXPECT_FALSE(ncelab::sign_normalize(pos).flipped);
}

TEST(HighField, FixtureDoublingIsPinned) {
  ProblemData data = fixture_problem();
  const double rho = ncelab::default_ball_radius(data).rho;
  ScalarField v0 = ncelab::find_v0(data, rho);
  const double norm = ncelab::h1_norm(data.A(), v0);
  EXPECT_GT(norm, rho);
  EXPECT_LE(ncelab::energy_value(v0, data), 0.0);
  EXPECT_GE(ncelab::min_value(v0), 0.0);
  // Regression pin: the doubling lands on the same amplitude every run.
  EXPECT_NEAR(norm, 2.3284243598695948e+31, 1e-9 * 2.3284243598695948e+31);
}

TEST(HighField, VanishingWeightIsAGeometryError) {
  Grid g({9, 9}, {0.1, 0.1});
  ProblemData data(MatrixField::identity(g), ScalarField(g),
                   oracle::bump_field(g, {0.5, 0.5}, 0.2, 0.1),
                   ncelab::GradientCoupling::constant(1.0), 2.0);
  try {
    ncelab::find_v0(data, 1e-3);
    FAIL() << "expected a geometry error";
  } catch (const ncelab::Error& e) {
    EXPECT_EQ(e.cls(), ncelab::ErrorClass::geometry);
    EXPECT_NE(std::string(e.what()).find("c0"), std::string::npos);
  }
}

TEST(HighField, DominantModeIsNonnegativeAndNormalized) {
  Grid g({17, 17}, {1.0 / 18.0, 1.0 / 18.0});
  ScalarField c0 = oracle::bump_field(g, {0.5, 0.5}, 0.2, 0.5);
  MatrixField A = MatrixField::identity(g);
  ncelab::DominantMode mode = ncelab::dominant_weighted_mode(A, c0);
  EXPECT_GT(mode.nu, 0.0);
  EXPECT_NEAR(ncelab::h1_norm(A, mode.phi), 1.0, 1e-10);
  for (std::int64_t i = 0; i < mode.phi.size(); ++i) EXPECT_GE(mode.phi[i], 0.0);
  // Pencil residual: diag(c0) phi = nu L phi. The iteration stops on the
  // Rayleigh quotient, so the vector residual only reaches the square root
  // of that tolerance (about 7e-6 here).
  ScalarField lhs(g), rhs = ncelab::apply_operator(A, mode.phi);
  for (std::int64_t i = 0; i < lhs.size(); ++i) lhs[i] = c0[i] * mode.phi[i];
  double worst = 0.0;
  for (std::int64_t i = 0; i < lhs.size(); ++i)
    worst = std::max(worst, std::abs(lhs[i] - mode.nu * rhs[i]));
  EXPECT_LT(worst, 5e-5);
}

TEST(Transform, EnergyCoherenceThroughTheChangeOfUnknown) {
  // I decreases along the descent direction in v; pushing the same field
  // through u and back is the identity, so energies must agree.
  ProblemData data = hand_problem();
  std::mt19937_64 eng(11);
  for (int trial = 0; trial < 5; ++trial) {
    ScalarField v = oracle::random_field(data.grid(), eng, 0.4);
    ScalarField u = ncelab::v_to_u(v, data.mu());
    ScalarField back = ncelab::u_to_v(u, data.mu());
    EXPECT_NEAR(ncelab::energy_value(back, data), ncelab::energy_value(v, data),
                1e-12 * (1.0 + std::abs(ncelab::energy_value(v, data))));
  }
}
