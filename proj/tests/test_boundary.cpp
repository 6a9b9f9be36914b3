#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "cmt/bisection.hpp"
#include "cmt/boundary.hpp"
#include "cmt/calibration.hpp"

namespace cmt {
namespace {

TEST(BracketBisect, Examples) {
  const BisectResult r = bracket_bisect([](double x) { return x; }, 0.3, 0.0, 1.0);
  EXPECT_NEAR(r.root, 0.3, 1e-9);
  EXPECT_FALSE(r.trace.empty());
  EXPECT_THROW(bracket_bisect([](double x) { return std::tanh(x); }, 2.0, -1.0, 1.0), BracketError);
}

TEST(BracketBisect, DecreasingProbeAndExpansion) {
  BisectOptions opts;
  opts.max_expansions = 10;
  const BisectResult r = bracket_bisect([](double x) { return std::exp(-x); }, 1e-3, 0.0, 1.0, opts);
  EXPECT_NEAR(r.root, -std::log(1e-3), 1e-8);
  opts.max_expansions = 1;
  EXPECT_THROW(bracket_bisect([](double x) { return std::exp(-x); }, 1e-9, 0.0, 1.0, opts), BracketError);
}

TEST(BracketBisect, SeededMonteCarloProbeConverges) {
  std::mt19937_64 rng(51);
  std::normal_distribution<double> z;
  std::vector<double> sample(10000);
  for (auto& x : sample) x = z(rng);
  const BisectResult r = calibrate_cutoff(sample, 0.05, 0.002);
  EXPECT_NEAR(upper_fraction(sample, r.root), 0.05, 0.002);
  EXPECT_NEAR(r.root, 1.645, 0.05);
  const BisectResult again = calibrate_cutoff(sample, 0.05, 0.002);
  EXPECT_EQ(r.root, again.root);
}

const RecursiveIntegrationMethod kGrid{};

TEST(GaussianBoundary, LargeThresholdGivesZero) {
  EXPECT_LT(gaussian_boundary_prob(BoundaryKind::EarlyUpper, 60.0, 50, 5, kGrid).value, 1e-12);
  EXPECT_LT(gaussian_boundary_prob(BoundaryKind::EarlyLower, 60.0, 50, 5, MonteCarloMethod{20000, 3, 1}).value,
            1e-12);
}

TEST(GaussianBoundary, OrthantProbability) {
  // P{S_1 >= 0 or S_2 >= 0} = 1 - (1/4 + asin(1/sqrt 2) / (2 pi)) = 0.625
  const double exact = 1.0 - (0.25 + std::asin(1.0 / std::numbers::sqrt2) / (2.0 * std::numbers::pi));
  ASSERT_NEAR(exact, 0.625, 1e-15);
  const auto mc = gaussian_boundary_prob(BoundaryKind::EarlyUpper, 0.0, 3, 1, MonteCarloMethod{1'000'000, 7, 0});
  EXPECT_NEAR(mc.value, exact, 3.0 * mc.standard_error);
  EXPECT_NEAR(gaussian_boundary_prob(BoundaryKind::EarlyUpper, 0.0, 3, 1, kGrid).value, exact, 1e-6);
  const auto lower = gaussian_boundary_prob(BoundaryKind::EarlyLower, 0.0, 3, 1, kGrid);
  EXPECT_NEAR(lower.value, exact, 1e-6);
}

TEST(GaussianBoundary, SingleStageIsNormalTail) {
  // N = 2, m0 = 1: only S_1 is monitored
  for (double t : {0.5, 1.0, 2.0}) {
    const double exact = normal_cdf(-std::sqrt(2.0 * t));
    EXPECT_NEAR(gaussian_boundary_prob(BoundaryKind::EarlyUpper, t, 2, 1, kGrid).value, exact, 1e-8);
  }
  // N = 1: terminal event alone
  EXPECT_NEAR(gaussian_boundary_prob(BoundaryKind::TerminalGivenNoEarly, 3.0, 1.0, 1, 1, kGrid).value,
              normal_cdf(-std::sqrt(2.0)), 1e-12);
}

TEST(GaussianBoundary, MethodsAgree) {
  const MonteCarloMethod mc{200'000, 11, 0};
  for (double t : {1.0, 2.0, 3.0, 4.0}) {
    for (auto kind : {BoundaryKind::EarlyUpper, BoundaryKind::EarlyLower}) {
      const auto m = gaussian_boundary_prob(kind, t, 50, 5, mc);
      const auto r = gaussian_boundary_prob(kind, t, 50, 5, kGrid);
      EXPECT_NEAR(m.value, r.value, 3.0 * m.standard_error + 1e-4) << "threshold " << t;
    }
    const auto m = gaussian_boundary_prob(BoundaryKind::TerminalGivenNoEarly, t, 1.4, 50, 5, mc);
    const auto r = gaussian_boundary_prob(BoundaryKind::TerminalGivenNoEarly, t, 1.4, 50, 5, kGrid);
    EXPECT_NEAR(m.value, r.value, 3.0 * m.standard_error + 1e-4) << "threshold " << t;
  }
}

TEST(GaussianBoundary, GridDoublingIsStable) {
  const RecursiveIntegrationMethod fine{1024, 8.0};
  for (double t : {1.0, 2.5, 4.0}) {
    EXPECT_LT(std::abs(gaussian_boundary_prob(BoundaryKind::EarlyUpper, t, 50, 5, kGrid).value -
                       gaussian_boundary_prob(BoundaryKind::EarlyUpper, t, 50, 5, fine).value),
              1e-4);
    EXPECT_LT(std::abs(gaussian_boundary_prob(BoundaryKind::TerminalGivenNoEarly, t, 1.4, 50, 5, kGrid).value -
                       gaussian_boundary_prob(BoundaryKind::TerminalGivenNoEarly, t, 1.4, 50, 5, fine).value),
              1e-4);
  }
}

TEST(GaussianBoundary, DecreasingInThreshold) {
  double previous = 1.0;
  for (double t = 0.25; t <= 6.0; t += 0.25) {
    const double p = gaussian_boundary_prob(BoundaryKind::EarlyUpper, t, 50, 5, kGrid).value;
    EXPECT_LE(p, previous);
    previous = p;
  }
  previous = 1.0;
  for (double c = 0.25; c <= 4.0; c += 0.25) {
    const double p = gaussian_boundary_prob(BoundaryKind::TerminalGivenNoEarly, 3.7, c, 50, 5, kGrid).value;
    EXPECT_LE(p, previous);
    previous = p;
  }
}

TEST(GaussianBoundary, RejectsInvalidInputs) {
  EXPECT_THROW(gaussian_boundary_prob(BoundaryKind::EarlyUpper, 1.0, 50, 51, kGrid), std::invalid_argument);
  EXPECT_THROW(gaussian_boundary_prob(BoundaryKind::EarlyUpper, -1.0, 50, 5, kGrid), std::invalid_argument);
  EXPECT_THROW(gaussian_boundary_prob(BoundaryKind::EarlyUpper, 1.0, 50, 5, RecursiveIntegrationMethod{2, 8.0}),
               std::invalid_argument);
  EXPECT_THROW(gaussian_boundary_prob(BoundaryKind::EarlyUpper, 1.0, 50, 5, MonteCarloMethod{0, 1, 1}),
               std::invalid_argument);
}

TEST(Siegmund, Examples) {
  // direct evaluation: r = sqrt(7.4), phi(r) = exp(-3.7) / sqrt(2 pi)
  const double r = std::sqrt(7.4);
  const double phi = std::exp(-3.7) / std::sqrt(2.0 * std::numbers::pi);
  const double oracle = 0.5 * ((r - 1.0 / r) * phi * std::log(10.0) + 4.0 * phi / r);
  EXPECT_NEAR(siegmund_early(3.7, 50, 5), oracle, 1e-15);
  EXPECT_NEAR(siegmund_early(3.7, 50, 5), 0.034, 5e-4);
  EXPECT_LT(siegmund_early(200.0, 50, 5), 1e-80);
}

TEST(Siegmund, WithinFactorTwoOfNumericalBoundary) {
  for (double a = 2.5; a <= 5.0; a += 0.25) {
    const double approx = siegmund_early(a, 50, 5);
    const double numeric = gaussian_boundary_prob(BoundaryKind::EarlyUpper, a, 50, 5, kGrid).value;
    EXPECT_GT(approx / numeric, 0.5) << a;
    EXPECT_LT(approx / numeric, 2.0) << a;
  }
}

TEST(Siegmund, SolvedThresholdsHitTargets) {
  const ThresholdTriple t = solve_thresholds_siegmund(0.05, 0.05, 0.5, 50, 5);
  EXPECT_DOUBLE_EQ(t.A, t.B);
  EXPECT_NEAR(siegmund_early(t.A, 50, 5), 0.025, 1e-6);
  EXPECT_NEAR(siegmund_terminal(t.A, t.C, 50, 5), 0.025, 1e-6);
  EXPECT_GT(t.A, 2.0);
  EXPECT_LT(t.A, 5.0);
  const ThresholdTriple u = solve_thresholds_siegmund(0.05, 0.10, 0.5, 50, 5);
  EXPECT_LT(u.B, u.A);
  EXPECT_THROW(solve_thresholds_siegmund(0.9999, 0.05, 0.9999, 50, 5), BracketError);
}

}  // namespace
}  // namespace cmt
