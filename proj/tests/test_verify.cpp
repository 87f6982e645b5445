#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "framescope/error.hpp"
#include "framescope/generate.hpp"
#include "framescope/potentials.hpp"
#include "framescope/rng.hpp"
#include "framescope/verify.hpp"

using namespace framescope;

namespace {

DiscreteMeasure unbalanced() { return new_measure({{1, 0}, {0, 1}}, {0.75, 0.25}); }
const std::vector<double> kSteps{1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5};

}  // namespace

TEST(FrameOpContinuity, EqualMeasures) {
  const auto r = check_frame_op_continuity(unbalanced(), unbalanced());
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.holds);
}

TEST(FrameOpContinuity, UnbalancedVersusOnb) {
  const auto r = check_frame_op_continuity(unbalanced(), onb_measure(2));
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.lhs, 0.25, 1e-15);
}

TEST(FrameOpContinuity, PreconditionEnforced) {
  try {
    check_frame_op_continuity(onb_measure(2), onb_measure(2).dilated(3.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PreconditionViolated);
  }
}

TEST(NearestTight, HandInstance) {
  const auto r = check_nearest_tight_bound(unbalanced(), onb_measure(2));
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.lhs, 0.0625, 1e-15);
  EXPECT_GE(r.rhs, 0.0625);
}

TEST(NearestTight, NearlyTightIsTrivial) {
  const auto mu = new_measure({{1, 0}, {0, 1}}, {0.5 + 5e-10, 0.5 - 5e-10});
  const auto r = check_nearest_tight_bound(mu, onb_measure(2), 1e-12);
  EXPECT_TRUE(r.holds);
  EXPECT_LE(r.lhs, 1e-9);
  EXPECT_THROW(check_nearest_tight_bound(mu, onb_measure(2)), Error);
}

TEST(TightIff, KnownCases) {
  EXPECT_TRUE(check_tight_iff(onb_measure(2)).holds);
  EXPECT_TRUE(check_tight_iff(mercedes_benz()).holds);
  const auto r = check_tight_iff(unbalanced());
  EXPECT_TRUE(r.holds);
  EXPECT_NEAR(r.rhs, 0.125, 1e-15);
}

TEST(TpOperatorBound, KnownCase) {
  const auto r = check_tp_operator_bound(unbalanced());
  EXPECT_TRUE(r.holds);
  EXPECT_DOUBLE_EQ(r.lhs, 0.25);
}

TEST(SubdifferentialExpansion, ZeroDirection) {
  const auto mu = unbalanced();
  const auto r = check_subdifferential_expansion(mu, Matrix::Zero(2, 2), kSteps);
  EXPECT_TRUE(r.holds);
  EXPECT_EQ(r.rhs, 2.0);
}

TEST(SubdifferentialExpansion, QuadraticResidual) {
  Rng rng(31);
  const auto mu = random_measure(rng, 3, 8);
  const auto along = check_subdifferential_expansion(mu, tp_gradient(mu).vectors, kSteps);
  EXPECT_TRUE(along.holds) << along.rhs;
  for (int seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    const auto m = random_measure(r, 1 + seed % 4, 3 + seed % 7);
    Matrix v(m.size(), m.dim());
    for (int i = 0; i < v.rows(); ++i)
      for (int c = 0; c < v.cols(); ++c) v(i, c) = r.normal();
    const auto res = check_subdifferential_expansion(m, v, kSteps);
    EXPECT_TRUE(res.holds) << "seed " << seed << " slope " << res.rhs;
  }
}

TEST(PframeBound, CircleIsNearlyEqual) {
  const auto r = check_pframe_bound(circle_discretization(256), 4);
  EXPECT_TRUE(r.holds);
  EXPECT_LT(r.lhs - r.rhs, 1e-3);
}

TEST(PframeBound, RandomUnitNorm) {
  Rng rng(2);
  for (int k = 0; k < 100; ++k) EXPECT_TRUE(check_pframe_bound(random_unit_norm(rng, 2, 5), 4).holds);
  EXPECT_TRUE(check_pframe_bound(unbalanced(), 2).holds);
}

TEST(GradientChecks, FiniteDifferenceOracles) {
  Rng rng(12);
  const auto mu = random_measure(rng, 3, 6);
  EXPECT_TRUE(check_even_moment_gradient(mu, 1).holds);
  EXPECT_TRUE(check_even_moment_gradient(mu, 2).holds);
  EXPECT_TRUE(check_tp_gradient(mu).holds);
  EXPECT_TRUE(check_even_moment_gradient(DiscreteMeasure::dirac(Vector::Zero(2)), 2).holds);
}

TEST(Barycenter, Continuity) {
  Rng rng(14);
  const auto mu = random_unit_norm(rng, 2, 4);
  const auto nu = random_unit_norm(rng, 2, 5);
  Vector z(2);
  z << 0.4, -0.7;
  EXPECT_TRUE(check_barycenter_continuity(mu, nu, z, 4).holds);
  EXPECT_TRUE(check_barycenter_continuity(mu, mu, z, 2).holds);
}

TEST(Witness, ReplayReproducesResult) {
  const auto original = check_nearest_tight_bound(unbalanced(), onb_measure(2));
  const auto again = replay_check(original.witness);
  EXPECT_EQ(again.name, original.name);
  EXPECT_EQ(again.lhs, original.lhs);
  EXPECT_EQ(again.rhs, original.rhs);
  EXPECT_THROW(replay_check(nlohmann::json{{"check", "nope"}}), Error);
}

TEST(Suite, AllPassAndDeterministic) {
  const auto a = run_suite({"all"}, 30, 5);
  EXPECT_EQ(a.failures, 0);
  EXPECT_EQ(a.results.size(), 30u * std::size(kSuiteNames));
  const auto b = run_suite({"all"}, 30, 5);
  for (std::size_t k = 0; k < a.results.size(); ++k) EXPECT_EQ(a.results[k].lhs, b.results[k].lhs);
  EXPECT_THROW(run_suite({"bogus"}, 1), Error);
}
