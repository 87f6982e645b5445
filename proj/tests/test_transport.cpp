#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "framescope/error.hpp"
#include "framescope/generate.hpp"
#include "framescope/rng.hpp"
#include "framescope/transport.hpp"

using namespace framescope;

namespace {

DiscreteMeasure uniform_points(Rng& rng, int d, int n) {
  Matrix x(n, d);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < d; ++c) x(i, c) = rng.uniform(-1.0, 1.0);
  return DiscreteMeasure::create(x, Vector::Constant(n, 1.0 / n));
}

// Equal-weight instances: optimal plans include a permutation matrix.
double brute_force_cost(const DiscreteMeasure& a, const DiscreteMeasure& b, double p) {
  const int n = a.size();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  double best = INFINITY;
  do {
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += std::pow((a.point(i) - b.point(perm[i])).norm(), p);
    best = std::min(best, c / n);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

void expect_feasible(const TransportPlan& plan) {
  EXPECT_LE(plan.marginal_violation(), 1e-9);
  EXPECT_GE(plan.coupling.minCoeff(), -1e-15);
}

}  // namespace

TEST(Exact, DiracPair) {
  Vector x(3), y(3);
  x << 1, 2, 3;
  y << -1, 0, 5;
  for (double p : {1.0, 2.0, 3.5}) {
    const auto r = wasserstein_exact(DiscreteMeasure::dirac(x), DiscreteMeasure::dirac(y), p);
    EXPECT_NEAR(r.distance, (x - y).norm(), 1e-14);
  }
}

TEST(Exact, SelfDistanceIsZeroWithDiagonalPlan) {
  Rng rng(3);
  const auto mu = random_measure(rng, 2, 7);
  const auto r = wasserstein_exact(mu, mu, 2.0);
  EXPECT_EQ(r.distance, 0.0);
  expect_feasible(r.plan);
  EXPECT_TRUE(r.plan.coupling.isApprox(Matrix(mu.weights().asDiagonal())));
}

TEST(Exact, MatchesPermutationBruteForce) {
  Rng rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.uniform_int(1, 6);
    const int d = rng.uniform_int(1, 3);
    const auto a = uniform_points(rng, d, n);
    const auto b = uniform_points(rng, d, n);
    const double p = trial % 2 == 0 ? 2.0 : 1.0;
    const auto r = wasserstein_exact(a, b, p);
    expect_feasible(r.plan);
    EXPECT_NEAR(r.plan.cost, brute_force_cost(a, b, p), 1e-12);
  }
}

TEST(Exact, UnequalSupportsAreFeasibleAndNoWorseThanProduct) {
  Rng rng(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_measure(rng, 2, rng.uniform_int(1, 12));
    const auto b = random_measure(rng, 2, rng.uniform_int(1, 12));
    const auto r = wasserstein_exact(a, b, 2.0);
    expect_feasible(r.plan);
    const Matrix product = a.weights() * b.weights().transpose();
    const double product_cost = product.cwiseProduct(cost_matrix(a.points(), b.points(), 2.0)).sum();
    EXPECT_LE(r.plan.cost, product_cost + 1e-12);
    EXPECT_NEAR(r.distance, std::sqrt(r.plan.cost), 1e-15);
  }
}

TEST(Exact, DegenerateTransportationProblem) {
  // All costs equal: every feasible plan is optimal, the solver must still terminate.
  Vector supply = Vector::Constant(5, 0.2), demand = Vector::Constant(5, 0.2);
  const Matrix gamma = solve_transportation(supply, demand, Matrix::Ones(5, 5));
  EXPECT_LE((gamma.rowwise().sum() - supply).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((gamma.colwise().sum().transpose() - demand).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Exact, RejectsDimensionMismatch) {
  EXPECT_THROW(wasserstein_exact(onb_measure(2), onb_measure(3), 2.0), Error);
  EXPECT_THROW(wasserstein_exact(onb_measure(2), onb_measure(2), 0.5), Error);
}

TEST(Entropic, CloseToExactOnEightByEight) {
  Rng rng(99);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = uniform_points(rng, 2, 8);
    const auto b = uniform_points(rng, 2, 8);
    const double exact = wasserstein_exact(a, b, 2.0).plan.cost;
    const auto r = wasserstein_entropic(a, b, 2.0, EntropicOptions{});
    expect_feasible(r.plan);
    EXPECT_GE(r.plan.cost, exact - 1e-12);
    EXPECT_LE(r.plan.cost, 1.01 * exact);
  }
}

TEST(Entropic, SelfCostSmall) {
  Rng rng(4);
  const auto mu = uniform_points(rng, 2, 8);
  EXPECT_LE(wasserstein_entropic(mu, mu, 2.0, EntropicOptions{}).plan.cost, 1e-2);
}

TEST(Entropic, RejectsZeroRegularization) {
  EntropicOptions options;
  options.reg = 0.0;
  try {
    wasserstein_entropic(onb_measure(2), onb_measure(2), 2.0, options);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidRegularization);
  }
}

TEST(PlanCost, ExactAndWorstPlans) {
  const auto a = new_measure({{0, 0}, {1, 0}}, {0.5, 0.5});
  const auto b = new_measure({{0, 0.1}, {1, 0.1}}, {0.5, 0.5});
  const auto r = wasserstein_exact(a, b, 2.0);
  EXPECT_NEAR(plan_cost(r.plan, 2.0), r.distance, 1e-15);

  TransportPlan worst = r.plan;
  worst.coupling << 0, 0.5, 0.5, 0;
  EXPECT_GE(plan_cost(worst, 2.0), r.distance);

  const auto self = wasserstein_exact(a, a, 2.0);
  EXPECT_EQ(plan_cost(self.plan, 2.0), 0.0);
}
