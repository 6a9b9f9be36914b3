#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "cmt/calibration.hpp"
#include "cmt/item_pool_io.hpp"

namespace cmt {
namespace {

const ItemPool& shared_pool() {
  static const ItemPool pool = synth_pool(1136, 3030);
  return pool;
}

TestConfig short_design() {
  TestConfig design;
  design.rule = RuleKind::Fixed;
  design.thresholds.max_len = 20;
  design.thresholds.min_stage = 2;
  return design;
}

CalibrationSettings small_settings() {
  CalibrationSettings s;
  s.replications = 1000;
  s.seed = 77;
  return s;
}

TEST(ImpliedAlternative, NullCandidateHasPowerEqualToLevel) {
  const ImpliedAlternativeSearch search(shared_pool(), short_design(), small_settings());
  const FixedLengthProbe at_null = search.probe(short_design().hyps.theta_plus);
  EXPECT_DOUBLE_EQ(at_null.type2, 1.0 - 0.05);
  const FixedLengthProbe lower = search.probe(-2.0);
  EXPECT_NEAR(lower.type1, 0.05, 0.002 + 1e-12);
  EXPECT_LT(lower.type2, 1.0 - 0.05);
}

TEST(ImpliedAlternative, Routine1IsDeterministicAndHitsTargets) {
  const auto a = routine1_implied_alternative(shared_pool(), short_design(), small_settings());
  const auto b = routine1_implied_alternative(shared_pool(), short_design(), small_settings());
  EXPECT_EQ(a.theta_implied, b.theta_implied);
  EXPECT_EQ(a.c_fixed, b.c_fixed);
  EXPECT_LT(a.theta_implied, short_design().hyps.theta_plus);
  EXPECT_NEAR(a.type1.value, 0.05, 0.005);
  EXPECT_NEAR(a.type2.value, 0.05, 0.01);
  EXPECT_FALSE(a.trace.empty());
}

TEST(ImpliedAlternative, BracketFailureIsReported) {
  TestConfig design = short_design();
  design.thresholds.max_len = 1;
  design.thresholds.min_stage = 1;
  EXPECT_THROW(routine1_implied_alternative(shared_pool(), design, small_settings()), BracketError);
}

TEST(Routine2, ThresholdsHitSubTargetsAndAreReproducible) {
  TestConfig design = short_design();
  design.hyps.theta_implied = -2.3;
  const auto settings = small_settings();
  const auto r = routine2_thresholds(shared_pool(), design, settings);
  const auto again = routine2_thresholds(shared_pool(), design, settings);
  EXPECT_EQ(r.A, again.A);
  EXPECT_EQ(r.B, again.B);
  EXPECT_EQ(r.C, again.C);
  // discrete probes: within tolerance or one replication of the target
  const double slack = 0.002 + 1.0 / 1000 + 1e-12;
  EXPECT_NEAR(r.early_accept.value, 0.025, slack);
  EXPECT_NEAR(r.early_reject.value, 0.025, slack);
  EXPECT_NEAR(r.terminal_reject.value, 0.025, slack);

  // re-evaluating the calibrated rule on the same paths reproduces the split
  TestConfig rule = design;
  rule.rule = RuleKind::ModHP;
  rule.thresholds.A = r.A;
  rule.thresholds.B = r.B;
  rule.thresholds.C = r.C;
  const auto at_plus = simulate_paths(shared_pool(), rule, design.hyps.theta_plus, 1000, settings.seed, 0);
  std::size_t rejections = 0;
  for (const auto& p : at_plus)
    if (evaluate_path(p, rule).decision == Decision::RejectH0) ++rejections;
  EXPECT_NEAR(rejections / 1000.0, r.early_reject.value + r.terminal_reject.value, 1e-12);
}

TEST(Routine2, RequiresImpliedAlternative) {
  EXPECT_THROW(routine2_thresholds(shared_pool(), short_design(), small_settings()), std::invalid_argument);
}

TEST(TerminalCutoff, AchievesLevel) {
  TestConfig rule = short_design();
  const auto at_plus = simulate_paths(shared_pool(), rule, rule.hyps.theta_plus, 2000, 5, 0);
  const BisectResult c = calibrate_terminal_c(at_plus, rule, 0.05, 0.002);
  rule.thresholds.C = c.root;
  std::size_t rejections = 0;
  for (const auto& p : at_plus)
    if (evaluate_path(p, rule).decision == Decision::RejectH0) ++rejections;
  EXPECT_NEAR(rejections / 2000.0, 0.05, 0.002 + 1e-12);
}

TEST(CalibrationSettings, Validation) {
  CalibrationSettings s;
  s.replications = 999;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s.replications = 1000;
  s.epsilon = 1.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace cmt
