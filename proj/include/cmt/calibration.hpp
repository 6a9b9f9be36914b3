// Monte Carlo calibration of the implied alternative and of the modified
// Haybittle-Peto thresholds (A, B, C).
//
// Every probe re-uses the same examinee streams (common random numbers), so
// the simulated probabilities are step functions of the thresholds and
// bisection behaves as on a deterministic monotone function.

#ifndef CMT_CALIBRATION_HPP
#define CMT_CALIBRATION_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

#include "cmt/bisection.hpp"
#include "cmt/boundary.hpp"
#include "cmt/irt_model.hpp"
#include "cmt/sim_engine.hpp"

namespace cmt {

struct CalibrationSettings {
  std::size_t replications = 10'000;
  double prob_tolerance = 0.002;
  double theta_tolerance = 0.005;
  double epsilon = 0.5;
  std::uint64_t seed = 1;
  unsigned workers = 0;

  void validate() const {
    if (replications < 1000) throw std::invalid_argument("calibration needs at least 1000 replications");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("calibration epsilon must lie in (0, 1)");
    if (!(prob_tolerance > 0.0) || !(theta_tolerance > 0.0))
      throw std::invalid_argument("calibration tolerances must be positive");
  }
};

struct AchievedProbability {
  double value = 0.0;
  double standard_error = 0.0;
};

inline AchievedProbability achieved(double p, std::size_t replications) {
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(replications))};
}

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();
inline constexpr double kThresholdTolerance = 1e-4;

/// Fraction of `values` that are >= c.
inline double upper_fraction(const std::vector<double>& values, double c) {
  std::size_t n = 0;
  for (double v : values)
    if (v >= c) ++n;
  return static_cast<double>(n) / static_cast<double>(values.size());
}

/// Cutoff c with P(value >= c) = target, by bracketing and bisection.
inline BisectResult calibrate_cutoff(const std::vector<double>& values, double target, double prob_tolerance) {
  BisectOptions opts;
  opts.value_tolerance = prob_tolerance;
  opts.x_tolerance = 1e-6;
  opts.max_expansions = 30;
  return bracket_bisect([&](double c) { return upper_fraction(values, c); }, target, -1.0, 1.0, opts);
}

// ---------------------------------------------------------------------------
// Routine 1: implied alternative

struct Routine1Result {
  double theta_implied = 0.0;
  double c_fixed = 0.0;  // level-alpha cutoff of the N-item LR test of theta_plus vs theta_implied
  AchievedProbability type1;
  AchievedProbability type2;
  std::vector<ProbePoint> trace;  // (candidate theta, type II error)
};

struct FixedLengthProbe {
  double cutoff = 0.0;
  double type1 = 0.0;  // simulated at theta_plus
  double type2 = 0.0;  // simulated at the candidate
};

/// Fixed-length likelihood-ratio tests of theta_plus against candidate
/// alternatives. Paths at theta_plus are simulated once; each probe finds the
/// level-alpha cutoff on them and then measures the type II error on paths
/// simulated at the candidate, all on the same examinee streams.
class ImpliedAlternativeSearch {
 public:
  ImpliedAlternativeSearch(const ItemPool& pool, const TestConfig& design, const CalibrationSettings& settings)
      : pool_(pool), design_(design), settings_(settings) {
    settings_.validate();
    design_.hyps.validate();
    const auto at_plus = simulate_paths(pool_, design_, design_.hyps.theta_plus, settings_.replications,
                                        settings_.seed, settings_.workers);
    plus_responses_.reserve(at_plus.size());
    for (const auto& path : at_plus) plus_responses_.push_back(path.responses());
  }

  FixedLengthProbe probe(double candidate) const {
    const Hypotheses& h = design_.hyps;
    if (candidate >= h.theta_plus) return {kInfinity, h.alpha, 1.0 - h.alpha};
    const std::size_t reps = plus_responses_.size();
    std::vector<double> llr_plus(reps);
    for (std::size_t r = 0; r < reps; ++r) llr_plus[r] = llr(plus_responses_[r], candidate, h.theta_plus);
    const BisectResult cut = calibrate_cutoff(llr_plus, h.alpha, settings_.prob_tolerance);
    const auto at_candidate =
        simulate_paths(pool_, design_, candidate, reps, settings_.seed, settings_.workers);
    std::size_t misses = 0;
    for (const auto& path : at_candidate)
      if (llr(path.responses(), candidate, h.theta_plus) < cut.root) ++misses;
    return {cut.root, cut.value, static_cast<double>(misses) / static_cast<double>(reps)};
  }

 private:
  const ItemPool& pool_;
  TestConfig design_;
  CalibrationSettings settings_;
  std::vector<std::vector<ScoredResponse>> plus_responses_;
};

/// Moves the candidate alternative in [theta_plus - 3, theta_plus] until the
/// type II error of the level-alpha fixed-length test equals beta. `design`
/// supplies the item selection, constraints, clamp and maximum length.
inline Routine1Result routine1_implied_alternative(const ItemPool& pool, const TestConfig& design,
                                                   const CalibrationSettings& settings) {
  const ImpliedAlternativeSearch search(pool, design, settings);
  const Hypotheses& h = design.hyps;
  BisectOptions opts;
  opts.value_tolerance = settings.prob_tolerance;
  opts.x_tolerance = settings.theta_tolerance;
  std::map<double, FixedLengthProbe> probes;
  auto probe = [&](double t) {
    auto it = probes.find(t);
    if (it == probes.end()) it = probes.emplace(t, search.probe(t)).first;
    return it->second;
  };
  const BisectResult outer =
      bracket_bisect([&](double t) { return probe(t).type2; }, h.beta, h.theta_plus - 3.0, h.theta_plus, opts);

  const FixedLengthProbe final_probe = probe(outer.root);
  Routine1Result result;
  result.theta_implied = outer.root;
  result.c_fixed = final_probe.cutoff;
  result.type1 = achieved(final_probe.type1, settings.replications);
  result.type2 = achieved(final_probe.type2, settings.replications);
  result.trace = outer.trace;
  return result;
}

// ---------------------------------------------------------------------------
// Routine 2: modified Haybittle-Peto thresholds

struct Routine2Result {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  AchievedProbability early_accept;     // at theta_implied, target eps*beta
  AchievedProbability early_reject;     // at theta_plus, target eps*alpha
  AchievedProbability terminal_reject;  // at theta_plus, target (1-eps)*alpha
  std::vector<ProbePoint> trace_b, trace_a, trace_c;
};

namespace detail {

inline double event_fraction(const std::vector<Path>& paths, const TestConfig& config, Decision decision,
                             bool early) {
  std::size_t n = 0;
  for (const auto& path : paths) {
    const Outcome o = evaluate_path(path, config);
    if (o.decision == decision && (o.length < config.max_len()) == early) ++n;
  }
  return static_cast<double>(n) / static_cast<double>(paths.size());
}

}  // namespace detail

/// Solves B, then A, then C on paths simulated at theta_implied and theta_plus.
/// `design.hyps.theta_implied` must be set; `design.thresholds` supplies N and m0.
inline Routine2Result routine2_thresholds(const ItemPool& pool, const TestConfig& design,
                                          const CalibrationSettings& settings) {
  settings.validate();
  const Hypotheses& h = design.hyps;
  h.validate();
  if (!h.has_implied()) throw std::invalid_argument("routine 2 needs the implied alternative");
  const std::size_t reps = settings.replications;
  const double eps = settings.epsilon;

  const std::vector<Path> at_implied =
      simulate_paths(pool, design, h.theta_implied, reps, settings.seed, settings.workers);
  const std::vector<Path> at_plus = simulate_paths(pool, design, h.theta_plus, reps, settings.seed, settings.workers);

  TestConfig config = design;
  config.rule = RuleKind::ModHP;
  config.thresholds.A = kInfinity;
  config.thresholds.B = kInfinity;
  config.thresholds.C = kInfinity;

  BisectOptions opts;
  opts.value_tolerance = settings.prob_tolerance;
  opts.x_tolerance = kThresholdTolerance;
  opts.max_expansions = 20;

  Routine2Result result;
  const BisectResult b = bracket_bisect(
      [&](double v) {
        config.thresholds.B = v;
        return detail::event_fraction(at_implied, config, Decision::AcceptH0, true);
      },
      eps * h.beta, 2.0, 5.0, opts);
  config.thresholds.B = result.B = b.root;
  result.early_accept = achieved(b.value, reps);
  result.trace_b = b.trace;

  const BisectResult a = bracket_bisect(
      [&](double v) {
        config.thresholds.A = v;
        return detail::event_fraction(at_plus, config, Decision::RejectH0, true);
      },
      eps * h.alpha, 2.0, 5.0, opts);
  config.thresholds.A = result.A = a.root;
  result.early_reject = achieved(a.value, reps);
  result.trace_a = a.trace;

  const BisectResult c = bracket_bisect(
      [&](double v) {
        config.thresholds.C = v;
        return detail::event_fraction(at_plus, config, Decision::RejectH0, false);
      },
      (1.0 - eps) * h.alpha, 0.5, 3.0, opts);
  result.C = c.root;
  result.terminal_reject = achieved(c.value, reps);
  result.trace_c = c.trace;
  return result;
}

/// Terminal cutoff C giving type I error alpha for a rule whose early
/// boundaries (if any) are already fixed in `config`; used for the fixed-length
/// and modified TSPRT comparators.
inline BisectResult calibrate_terminal_c(const std::vector<Path>& at_plus, TestConfig config, double alpha,
                                         double prob_tolerance) {
  BisectOptions opts;
  opts.value_tolerance = prob_tolerance;
  opts.x_tolerance = kThresholdTolerance;
  opts.max_expansions = 20;
  return bracket_bisect(
      [&](double v) {
        config.thresholds.C = v;
        std::size_t n = 0;
        for (const auto& path : at_plus)
          if (evaluate_path(path, config).decision == Decision::RejectH0) ++n;
        return static_cast<double>(n) / static_cast<double>(at_plus.size());
      },
      alpha, 0.0, 2.0, opts);
}

}  // namespace cmt

#endif  // CMT_CALIBRATION_HPP
