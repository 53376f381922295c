#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ncelab/errors.hpp"
#include "ncelab/nonlinearity.hpp"
#include "ncelab/props.hpp"
#include "oracles.hpp"

using ncelab::G;
using ncelab::g;
using ncelab::g_prime;
using ncelab::Grid;
using ncelab::H;
using ncelab::ScalarField;

namespace {

// Integral of g from 0 to s, split at the kink -1/mu where g changes branch.
double primitive_by_quadrature(double s, double mu) {
  const auto integrand = [mu](double x) { return g(x, mu); };
  const double kink = -1.0 / mu;
  if (s >= kink) return oracle::integrate_adaptive(integrand, 0.0, s);
  return oracle::integrate_adaptive(integrand, 0.0, kink) +
         oracle::integrate_adaptive(integrand, kink, s);
}

}  // namespace

TEST(Nonlinearity, HandValues) {
  const double ln2 = std::log(2.0);
  EXPECT_NEAR(g(1.0, 1.0), 2.0 * ln2 - 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(g(0.0, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(g(-2.0, 1.0), 2.0);  // below the kink g(s) = -s
  EXPECT_NEAR(G(1.0, 1.0), 2.0 * ln2 - 1.25, 1e-15);
  EXPECT_NEAR(G(-1.0, 1.0), -0.25, 1e-15);
  EXPECT_NEAR(H(1.0, 1.0), 0.75 - ln2, 1e-15);
  EXPECT_DOUBLE_EQ(H(-2.0, 1.0), -0.25);
  EXPECT_NEAR(g_prime(1.0, 1.0), ln2, 1e-15);
}

TEST(Nonlinearity, PrimitiveMatchesAdaptiveQuadrature) {
  for (double mu : {0.5, 1.0, 2.0}) {
    for (double s = -5.0; s <= 5.0 + 1e-12; s += 0.25) {
      const double want = primitive_by_quadrature(s, mu);
      EXPECT_NEAR(G(s, mu), want, 1e-10) << "s=" << s << " mu=" << mu;
    }
  }
}

TEST(Nonlinearity, ScalingDefectIsConstantBelowTheKink) {
  for (double mu : {0.5, 1.0, 2.0}) {
    const double kink = -1.0 / mu;
    const double plateau = -1.0 / (4.0 * mu * mu);
    for (double s : {kink, kink - 0.5, 2.0 * kink, 10.0 * kink, -1e6}) {
      EXPECT_EQ(H(s, mu), plateau) << "s=" << s << " mu=" << mu;
    }
    EXPECT_NEAR(H(kink, mu), -G(kink, mu) - 0.5 / (mu * mu), 1e-15);
  }
}

TEST(Nonlinearity, BranchesMeetContinuouslyAtTheKink) {
  for (double mu : {0.5, 1.0, 2.0}) {
    const double kink = -1.0 / mu;
    const double eps = 1e-12;
    EXPECT_NEAR(g(kink + eps, mu), g(kink, mu), 1e-9);
    EXPECT_NEAR(G(kink + eps, mu), G(kink, mu), 1e-9);
    EXPECT_NEAR(H(kink + eps, mu), H(kink, mu), 1e-9);
    EXPECT_DOUBLE_EQ(g(kink, mu), 1.0 / mu);
  }
}

TEST(Nonlinearity, SeriesAndDirectBranchesAgreeAtTheSwitch) {
  for (double mu : {0.5, 1.0, 2.0}) {
    const double s_switch = ncelab::detail::t_series / mu;
    for (double s : {s_switch * (1.0 - 1e-9), s_switch * (1.0 + 1e-9), -s_switch * (1.0 - 1e-9),
                     -s_switch * (1.0 + 1e-9)}) {
      const double exact = ((1.0 + mu * s) * std::log1p(mu * s)) / mu - s;
      EXPECT_NEAR(g(s, mu), exact, 1e-15 + 1e-12 * std::abs(exact)) << "s=" << s;
    }
  }
}

TEST(Nonlinearity, DerivativeCapAtTheKinkItself) {
  const double mu = 1.0;
  EXPECT_DOUBLE_EQ(g_prime(-1.0, mu), -ncelab::detail::g_prime_cap);
  EXPECT_DOUBLE_EQ(g_prime(-5.0, mu), -1.0);  // below the kink g' = -1
  EXPECT_GT(g_prime(-1.0 + 1e-9, mu), -ncelab::detail::g_prime_cap);
}

TEST(Nonlinearity, TransformRoundTrip) {
  Grid grid({9}, {0.1});
  std::mt19937_64 eng(3);
  for (double mu : {0.5, 1.0, 2.0}) {
    ScalarField v = oracle::random_field(grid, eng, 5.0);
    for (std::int64_t i = 0; i < v.size(); ++i)
      v[i] = std::max(v[i], -0.9 / mu);  // inside the domain of the transform
    ScalarField u = ncelab::v_to_u(v, mu);
    ScalarField back = ncelab::u_to_v(u, mu);
    for (std::int64_t i = 0; i < v.size(); ++i)
      EXPECT_NEAR(back[i], v[i], 1e-12 * (1.0 + std::abs(v[i])));
  }
}

TEST(Coupling, FieldBoundsAreEnforced) {
  Grid grid({4}, {0.2});
  ScalarField inside(grid, {0.5, 0.6, 0.9, 1.0});
  EXPECT_NO_THROW(ncelab::GradientCoupling::field(inside, 0.5, 1.0));
  ScalarField outside(grid, {0.4, 0.6, 0.9, 1.0});
  EXPECT_THROW(ncelab::GradientCoupling::field(outside, 0.5, 1.0), ncelab::Error);
  EXPECT_THROW(ncelab::GradientCoupling::field(inside, -0.5, 1.0), ncelab::Error);
  EXPECT_THROW(ncelab::GradientCoupling::field(inside, 1.0, 0.5), ncelab::Error);
  ncelab::GradientCoupling c = ncelab::GradientCoupling::field(inside, 0.5, 1.0);
  EXPECT_TRUE(c.is_field());
  EXPECT_DOUBLE_EQ(c.lower(), 0.5);
  EXPECT_DOUBLE_EQ(c.upper(), 1.0);
  EXPECT_DOUBLE_EQ(c.at(2), 0.9);
  EXPECT_THROW(c.scalar(), ncelab::Error);
}

TEST(Properties, AllSuitesPass) {
  ncelab::PropsOutcome out = ncelab::run_property_suites(0);
  EXPECT_TRUE(out.all_pass);
  for (const ncelab::PropRow& row : out.rows) EXPECT_TRUE(row.pass) << row.name;
  ASSERT_EQ(out.rows.size(), 7u);
}

TEST(Properties, WorstCasesAreFrozen) {
  ncelab::PropsOutcome out = ncelab::run_property_suites(0);
  const auto find = [&](const std::string& name) -> const ncelab::PropRow& {
    for (const ncelab::PropRow& row : out.rows)
      if (row.name == name) return row;
    throw std::runtime_error("missing row " + name);
  };
  EXPECT_NEAR(find("positivity of g").worst, 2.4999999958333334e-17, 1e-22);
  EXPECT_NEAR(find("growth bound of g").worst, 1.3417128354799117, 1e-9);
  EXPECT_NEAR(find("small-s decay of g/s").worst, 0.0004998334166167, 1e-12);
  EXPECT_NEAR(find("superlinear ratios").worst, 1.9296818781126046, 1e-9);
  EXPECT_DOUBLE_EQ(find("scaling inequality of H").worst, 0.0);
  EXPECT_NEAR(find("derivative consistency").worst, 0.31639405135206611, 1e-6);
  EXPECT_NEAR(find("energy gradient consistency").worst, 1.5374097043879977e-05, 1e-9);
}

TEST(Properties, GradientConsistencySeedInsensitive) {
  for (std::uint64_t seed : {7ull, 12345ull}) {
    ncelab::PropRow row = ncelab::prop_gradient_consistency(seed);
    EXPECT_TRUE(row.pass) << "seed " << seed << " worst " << row.worst;
  }
}
