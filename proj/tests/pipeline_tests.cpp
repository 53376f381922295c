#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "ncelab/general.hpp"
#include "ncelab/pipeline.hpp"
#include "oracles.hpp"

using namespace ncelab;

namespace {

Grid unit_square() { return Grid::from_lengths({17, 17}, {1.0, 1.0}); }

/// Gaussian weight against a gaussian forcing on a 17x17 interior grid. At
/// amplitude 10 the coercivity constant is ~0.66 and both branches converge in
/// well under a second, which makes this the workhorse fixture of this file.
ProblemData small_problem(double c0_amp = 10.0, double mu = 1.0, double f_amp = 0.1) {
  Grid g = unit_square();
  return ProblemData(MatrixField::identity(g), oracle::bump_field(g, {0.5, 0.5}, 0.25, c0_amp),
                     oracle::bump_field(g, {0.5, 0.5}, 0.25, f_amp),
                     GradientCoupling::constant(mu), 2.0);
}

double profile_max(const std::vector<double>& profile) {
  return *std::max_element(profile.begin(), profile.end());
}

}  // namespace

TEST(Pipeline, BothBranchesConvergeWithCertificates) {
  BothOutcome out = solve_model_both(small_problem());

  EXPECT_TRUE(out.report.coercive_ok);
  EXPECT_TRUE(out.report.h2_ok);
  EXPECT_GT(out.rho, 0.0);
  EXPECT_FALSE(out.sign_flipped);

  EXPECT_TRUE(out.minimum.converged);
  EXPECT_TRUE(out.pass.converged);
  EXPECT_LE(out.minimum.residual_norm, 1e-8);
  EXPECT_LE(out.pass.residual_norm, 1e-8);

  EXPECT_TRUE(out.minimum.lower_bound_ok);
  EXPECT_TRUE(out.pass.lower_bound_ok);
  EXPECT_GT(out.minimum.min_v, -0.5);
  EXPECT_GT(out.pass.min_v, -0.5);

  EXPECT_LT(out.minimum.energy, 0.0);
  EXPECT_GT(out.pass.energy, 0.0);
  EXPECT_GT(out.separation, 1e-4);

  ASSERT_TRUE(out.minimum.u.has_value());
  ASSERT_TRUE(out.pass.u.has_value());
  EXPECT_FALSE(out.minimum.projection_active);
}

TEST(Pipeline, SeparationMatchesItsDefinition) {
  BothOutcome out = solve_model_both(small_problem());
  const ScalarField& u1 = *out.minimum.u;
  const ScalarField& u2 = *out.pass.u;
  double diff = 0.0, scale = 0.0;
  for (std::int64_t i = 0; i < u1.size(); ++i) {
    diff = std::max(diff, std::abs(u1[i] - u2[i]));
    scale = std::max(scale, std::abs(u1[i]));
  }
  EXPECT_DOUBLE_EQ(out.separation, diff / std::max(1.0, scale));
}

TEST(Pipeline, PathMaxProfilesDecreaseMonotonically) {
  BothOutcome out = solve_model_both(small_problem());
  const auto& profiles = out.pass.path_energy;
  ASSERT_GT(profiles.size(), 1u);
  for (const auto& profile : profiles) {
    ASSERT_EQ(profile.size(), 21u);
    EXPECT_EQ(profile.front(), 0.0);
    EXPECT_LT(profile.back(), 0.0);
  }
  for (std::size_t k = 1; k < profiles.size(); ++k) {
    const double prev = profile_max(profiles[k - 1]);
    const double cur = profile_max(profiles[k]);
    EXPECT_LE(cur, prev + 1e-12 * (1.0 + std::abs(prev)))
        << "path max rose between sweeps " << k - 1 << " and " << k;
  }
}

TEST(Pipeline, LogsKeepTheCeramiWeightConsistent) {
  BothOutcome out = solve_model_both(small_problem());
  for (const SolveResult* res : {&out.minimum, &out.pass}) {
    ASSERT_FALSE(res->log.empty());
    int last = -1;
    for (const IterationRecord& rec : res->log) {
      EXPECT_GE(rec.residual, 0.0);
      EXPECT_GE(rec.cerami, rec.residual);
      EXPECT_GE(rec.iteration, last);
      last = rec.iteration;
    }
  }
}

TEST(Pipeline, RepeatedRunsAreBitwiseIdentical) {
  BothOutcome a = solve_model_both(small_problem());
  BothOutcome b = solve_model_both(small_problem());
  ASSERT_EQ(a.minimum.v.size(), b.minimum.v.size());
  for (std::int64_t i = 0; i < a.minimum.v.size(); ++i) {
    ASSERT_EQ(a.minimum.v[i], b.minimum.v[i]);
    ASSERT_EQ(a.pass.v[i], b.pass.v[i]);
    ASSERT_EQ((*a.minimum.u)[i], (*b.minimum.u)[i]);
    ASSERT_EQ((*a.pass.u)[i], (*b.pass.u)[i]);
  }
  EXPECT_EQ(a.minimum.energy, b.minimum.energy);
  EXPECT_EQ(a.pass.energy, b.pass.energy);
  EXPECT_EQ(a.separation, b.separation);
  EXPECT_EQ(a.pass.iterations, b.pass.iterations);
}

TEST(Pipeline, NegatedCouplingMirrorsBothBranches) {
  BothOutcome plus = solve_model_both(small_problem());

  Grid g = unit_square();
  ProblemData mirrored(MatrixField::identity(g), oracle::bump_field(g, {0.5, 0.5}, 0.25, 10.0),
                       oracle::bump_field(g, {0.5, 0.5}, 0.25, -0.1),
                       GradientCoupling::constant(-1.0), 2.0);
  BothOutcome minus = solve_model_both(mirrored);

  EXPECT_FALSE(plus.sign_flipped);
  EXPECT_TRUE(minus.sign_flipped);
  EXPECT_EQ(plus.separation, minus.separation);
  EXPECT_EQ(plus.minimum.energy, minus.minimum.energy);
  EXPECT_EQ(plus.pass.energy, minus.pass.energy);
  for (std::int64_t i = 0; i < plus.minimum.v.size(); ++i) {
    ASSERT_EQ(plus.minimum.v[i], minus.minimum.v[i]);
    ASSERT_EQ(plus.pass.v[i], minus.pass.v[i]);
    ASSERT_EQ((*plus.minimum.u)[i], -(*minus.minimum.u)[i]);
    ASSERT_EQ((*plus.pass.u)[i], -(*minus.pass.u)[i]);
  }
}

TEST(Pipeline, SingleBranchRunsMatchTheJointRun) {
  BothOutcome both = solve_model_both(small_problem());
  BranchOutcome mn = solve_model_min(small_problem());
  BranchOutcome mp = solve_model_mp(small_problem());
  EXPECT_EQ(mn.result.energy, both.minimum.energy);
  EXPECT_EQ(mp.result.energy, both.pass.energy);
  EXPECT_EQ(mn.result.iterations, both.minimum.iterations);
  EXPECT_EQ(mp.result.iterations, both.pass.iterations);
  for (std::int64_t i = 0; i < mn.result.v.size(); ++i) {
    ASSERT_EQ(mn.result.v[i], both.minimum.v[i]);
    ASSERT_EQ(mp.result.v[i], both.pass.v[i]);
  }
}

TEST(Pipeline, GeneralMatchesAcrossCouplingRepresentations) {
  Grid g = unit_square();
  ScalarField c0 = oracle::bump_field(g, {0.5, 0.5}, 0.25, 10.0);
  ScalarField f = oracle::bump_field(g, {0.5, 0.5}, 0.25, 0.1);

  ProblemData constant(MatrixField::identity(g), c0, f, GradientCoupling::constant(0.7), 2.0);
  GeneralOutcome a = solve_general(constant);

  GeneralH clipped_at_infinity;
  clipped_at_infinity.form = GeneralH::Form::clipped;
  GeneralOutcome b = solve_general(constant, clipped_at_infinity);

  ProblemData field_coupling(MatrixField::identity(g), c0, f,
                             GradientCoupling::field(oracle::constant_field(g, 0.7), 0.7, 0.7),
                             2.0);
  GeneralOutcome c = solve_general(field_coupling);

  for (const GeneralOutcome* out : {&a, &b, &c}) {
    EXPECT_TRUE(out->solution.converged);
    EXPECT_TRUE(out->solution.bracket_ok);
    EXPECT_TRUE(out->solution.lower_bound_ok);
    EXPECT_FALSE(out->sign_flipped);
  }
  for (std::int64_t i = 0; i < g.size(); ++i) {
    ASSERT_EQ((*a.solution.u)[i], (*b.solution.u)[i]);
    ASSERT_EQ((*b.solution.u)[i], (*c.solution.u)[i]);
  }
}

TEST(Pipeline, GeneralAgreesWithTheMinimizerBranchUpToDiscretization) {
  ProblemData data = small_problem();
  BranchOutcome mn = solve_model_min(data);
  GeneralOutcome gen = solve_general(data);

  const ScalarField& a = *mn.result.u;
  const ScalarField& b = *gen.solution.u;
  ScalarField diff(data.grid());
  double sup = 0.0;
  for (std::int64_t i = 0; i < a.size(); ++i) {
    diff[i] = a[i] - b[i];
    sup = std::max(sup, std::abs(diff[i]));
  }
  // The two answers solve the u-frame and v-frame discretizations of the same
  // equation; the gap is pure O(h^2) truncation (measured ~5e-7 on this grid).
  EXPECT_LE(sup, 1e-5);
  EXPECT_LE(lp_norm(diff, 2.0), 1e-5);
  EXPECT_TRUE(gen.solution.bracket_ok);
}

TEST(Pipeline, GeneralSolutionStaysInsideTheBracket) {
  GeneralOutcome out = solve_general(small_problem());
  const ScalarField& u = *out.solution.u;
  for (std::int64_t i = 0; i < u.size(); ++i) {
    ASSERT_GE(u[i], out.bracket.lower[i] - 1e-10);
    ASSERT_LE(u[i], out.bracket.upper[i] + 1e-10);
    ASSERT_EQ(out.bracket.lower[i], -out.bracket.upper[i]);
  }
  EXPECT_TRUE(out.bracket.extremal.lower_bound_ok);
  EXPECT_GE(min_value(out.bracket.upper), -1e-10);
}

TEST(Pipeline, ZeroForcingGivesTheZeroSolution) {
  Grid g = unit_square();
  ProblemData data(MatrixField::identity(g), oracle::bump_field(g, {0.5, 0.5}, 0.25, 10.0),
                   ScalarField(g), GradientCoupling::constant(1.0), 2.0);
  GeneralOutcome out = solve_general(data);
  EXPECT_TRUE(out.solution.converged);
  EXPECT_TRUE(out.solution.bracket_ok);
  for (std::int64_t i = 0; i < g.size(); ++i) {
    ASSERT_EQ((*out.solution.u)[i], 0.0);
    ASSERT_LE(out.bracket.lower[i], 0.0);
    ASSERT_GE(out.bracket.upper[i], 0.0);
  }
}

TEST(Pipeline, LargeCouplingTripsTheSmallnessGate) {
  std::string msg;
  int cls = oracle::caught_error_class([] { solve_model_mp(small_problem(10.0, 100.0)); }, &msg);
  EXPECT_EQ(cls, static_cast<int>(ErrorClass::hypothesis)) << msg;
  EXPECT_NE(msg.find("smallness"), std::string::npos) << msg;

  cls = oracle::caught_error_class([] { solve_model_both(small_problem(10.0, 100.0)); }, &msg);
  EXPECT_EQ(cls, static_cast<int>(ErrorClass::hypothesis)) << msg;
}

TEST(Pipeline, StrongWeightTripsTheCoercivityGate) {
  std::string msg;
  int cls = oracle::caught_error_class([] { solve_model_min(small_problem(40.0)); }, &msg);
  EXPECT_EQ(cls, static_cast<int>(ErrorClass::hypothesis)) << msg;
  EXPECT_NE(msg.find("coercivity"), std::string::npos) << msg;
}

TEST(Pipeline, VanishingWeightIsAGeometryExitForThePassBranch) {
  Grid g = unit_square();
  ScalarField f = oracle::bump_field(g, {0.5, 0.5}, 0.25, 0.1);
  ProblemData data(MatrixField::identity(g), ScalarField(g), f, GradientCoupling::constant(1.0),
                   2.0);

  std::string msg;
  int cls = oracle::caught_error_class([&] { solve_model_mp(data); }, &msg);
  EXPECT_EQ(cls, static_cast<int>(ErrorClass::geometry)) << msg;
  EXPECT_NE(msg.find("c0"), std::string::npos) << msg;
  cls = oracle::caught_error_class([&] { solve_model_both(data); }, &msg);
  EXPECT_EQ(cls, static_cast<int>(ErrorClass::geometry)) << msg;

  // The minimizer branch has no concentration mode to lose: it must agree
  // with the linear comparison solve of L v = mu f v + f.
  BranchOutcome mn = solve_model_min(data);
  ScalarField h(g);
  for (std::int64_t i = 0; i < g.size(); ++i) h[i] = f[i];
  SolveResult lin = solve_linear(h, f, data);
  for (std::int64_t i = 0; i < g.size(); ++i)
    ASSERT_NEAR(mn.result.v[i], lin.v[i], 1e-8);
}

TEST(Pipeline, ShrunkenRidgeIsAGeometryError) {
  std::string msg;
  int cls = oracle::caught_error_class([] { solve_model_mp(small_problem(15.0)); }, &msg);
  EXPECT_EQ(cls, static_cast<int>(ErrorClass::geometry)) << msg;
  EXPECT_NE(msg.find("no mountain ridge at radius"), std::string::npos) << msg;
}

TEST(Pipeline, ExplicitRadiusOverridesTheDefault) {
  ProblemData data = small_problem();
  // Doubling the automatic radius keeps the ridge on the sphere while making
  // the override visible in the outcome.
  const double chosen = 2.0 * ncelab::default_ball_radius(data).rho;
  PipelineOptions opts;
  opts.rho = chosen;
  BothOutcome out = solve_model_both(data, opts);
  EXPECT_EQ(out.rho, chosen);
  EXPECT_TRUE(out.minimum.converged);
  EXPECT_TRUE(out.pass.converged);
}
