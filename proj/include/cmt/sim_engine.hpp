// Simulated administration of mastery tests and operating characteristics.
//
// A replication's item sequence depends only on its responses, never on the
// stopping thresholds. simulate_path() therefore records the full N-item path
// once and evaluate_path() applies any stopping rule to it; the outcome equals
// what administer_test() produces by stopping early on the same streams.

#ifndef CMT_SIM_ENGINE_HPP
#define CMT_SIM_ENGINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmt/irt_model.hpp"
#include "cmt/item_selection.hpp"
#include "cmt/parallel.hpp"
#include "cmt/random.hpp"
#include "cmt/stopping_rules.hpp"

namespace cmt {

enum class RuleKind { Fixed, SPRT, TSPRT, ModTSPRT, ModHP };

inline const char* to_string(RuleKind kind) {
  switch (kind) {
    case RuleKind::Fixed: return "fixed";
    case RuleKind::SPRT: return "sprt";
    case RuleKind::TSPRT: return "tsprt";
    case RuleKind::ModTSPRT: return "modtsprt";
    case RuleKind::ModHP: return "modhp";
  }
  return "?";
}

struct TestConfig {
  RuleKind rule = RuleKind::ModHP;
  Hypotheses hyps;
  Thresholds thresholds;
  SelectionRule selection;
  std::optional<ContentConstraints> constraints;
  ClampInterval clamp;
  std::uint64_t seed = 0;
  std::string label;  // report column name; defaults to the rule kind

  int max_len() const { return thresholds.max_len; }
  std::string name() const { return label.empty() ? to_string(rule) : label; }

  void validate() const {
    hyps.validate();
    thresholds.validate();
    clamp.validate();
    if (constraints) constraints->validate();
    if (rule == RuleKind::ModHP && !hyps.has_implied())
      throw std::invalid_argument("modhp rule needs a calibrated implied alternative");
  }
};

/// True when two configurations generate identical item paths for the same
/// streams (everything except the stopping rule and thresholds agrees).
inline bool same_path_design(const TestConfig& l, const TestConfig& r) {
  auto constraints_equal = [](const auto& a, const auto& b) {
    if (a.has_value() != b.has_value()) return false;
    return !a || (a->proportions == b->proportions && a->exposure_cap == b->exposure_cap);
  };
  return l.hyps.theta_cut == r.hyps.theta_cut && l.selection.kind == r.selection.kind &&
         l.selection.kl_halfwidth == r.selection.kl_halfwidth && constraints_equal(l.constraints, r.constraints) &&
         l.clamp.lo == r.clamp.lo && l.clamp.hi == r.clamp.hi && l.max_len() == r.max_len();
}

/// Statistics available after the k-th response.
struct StageRecord {
  ScoredResponse response;
  MleResult estimate;
  double llr = 0.0;          // log L(theta_minus) / L(theta_plus)
  double glr_plus = 0.0;     // log L(theta_hat) / L(theta_plus), floored at 0
  double glr_implied = 0.0;  // log L(theta_hat) / L(theta_implied); NaN if uncalibrated
};

/// Decision of `config`'s rule after stage k (1-based).
inline Decision decide(const TestConfig& config, int k, const StageRecord& s) {
  const Thresholds& t = config.thresholds;
  switch (config.rule) {
    case RuleKind::Fixed:
      return k < t.max_len ? Decision::Continue : fixed_length_decision(s.llr, t.C);
    case RuleKind::SPRT:
    case RuleKind::TSPRT:
    case RuleKind::ModTSPRT:
      return tsprt_step(k, t.max_len, s.llr, t.A, t.B, t.C);
    case RuleKind::ModHP:
      return modhp_step(k, t, config.hyps, s.estimate.theta_hat, s.glr_plus, s.glr_implied);
  }
  throw std::logic_error("unknown rule kind");
}

/// One examinee's test in progress: owns the operative pool and running
/// statistics, and chooses items under the configured selection rule.
class TestSession {
 public:
  TestSession(const ItemPool& pool, const TestConfig& config, const ExamineeStreams& streams)
      : config_(config), grid_(config.clamp) {
    if (config.constraints) {
      operative_ = prune_pool_exposure(pool, config.max_len(), *config.constraints, config.hyps.theta_cut,
                                       streams.pruning_seed());
      pool_ = &*operative_;
      category_counts_.assign(config.constraints->category_count(), 0);
      category_left_.assign(config.constraints->category_count(), 0);
      for (const auto& item : *pool_)
        if (item.category >= 0 && static_cast<std::size_t>(item.category) < category_left_.size())
          ++category_left_[static_cast<std::size_t>(item.category)];
    } else {
      pool_ = &pool;
    }
    used_.assign(pool_->size(), 0);
    responses_.reserve(static_cast<std::size_t>(config.max_len()));
  }

  const ItemPool& operative_pool() const { return *pool_; }
  int stage() const { return static_cast<int>(responses_.size()); }
  std::span<const ScoredResponse> responses() const { return responses_; }

  /// Pool index of the next item to administer.
  std::size_t select() const {
    const double point = selection_point(config_.selection, estimate_, config_.hyps.theta_cut);
    int category = -1;
    if (config_.constraints) {
      std::vector<char> available(category_left_.size());
      for (std::size_t i = 0; i < available.size(); ++i) available[i] = category_left_[i] > 0;
      category = static_cast<int>(spiral_category(category_counts_, config_.constraints->proportions, available));
    }
    const auto best = best_unused(*pool_, used_, config_.selection, point, category);
    if (!best) throw PoolExhausted("item pool exhausted before a terminal decision");
    return *best;
  }

  const StageRecord& record(std::size_t index, bool correct) {
    const Item& item = (*pool_)[index];
    if (used_[index]) throw std::logic_error("item administered twice");
    used_[index] = 1;
    if (config_.constraints) {
      const auto cat = static_cast<std::size_t>(item.category);
      if (cat < category_counts_.size()) {
        ++category_counts_[cat];
        --category_left_[cat];
      }
    }
    responses_.push_back({item, correct});
    grid_.add(item, correct);

    const Hypotheses& h = config_.hyps;
    ll_minus_ += log_response_prob(item, correct, h.theta_minus);
    ll_plus_ += log_response_prob(item, correct, h.theta_plus);
    if (h.has_implied()) ll_implied_ += log_response_prob(item, correct, h.theta_implied);

    StageRecord s;
    s.response = responses_.back();
    s.estimate = grid_.estimate(responses_);
    estimate_ = s.estimate;
    const double ll_hat = log_likelihood(responses_, s.estimate.theta_hat);
    s.llr = ll_minus_ - ll_plus_;
    s.glr_plus = std::max(0.0, ll_hat - ll_plus_);
    s.glr_implied = h.has_implied() ? std::max(0.0, ll_hat - ll_implied_) : kNotCalibrated;
    last_ = s;
    return last_;
  }

 private:
  const TestConfig& config_;
  std::optional<ItemPool> operative_;
  const ItemPool* pool_ = nullptr;
  std::vector<char> used_;
  std::vector<int> category_counts_;
  std::vector<int> category_left_;
  std::vector<ScoredResponse> responses_;
  MleGrid grid_;
  std::optional<MleResult> estimate_;
  double ll_minus_ = 0.0;
  double ll_plus_ = 0.0;
  double ll_implied_ = 0.0;
  StageRecord last_;
};

struct Transcript {
  std::vector<ItemId> items;
  std::vector<bool> responses;
  std::vector<int> categories;
  std::vector<MleResult> estimates;
  std::vector<Decision> decisions;
  Decision final_decision = Decision::Continue;

  int length() const { return static_cast<int>(items.size()); }
};

inline bool draw_response(UniformStream& stream, const Item& item, double theta_true) {
  return stream.next() < prob_correct(item, theta_true);
}

inline Transcript administer_test(const ItemPool& pool, const TestConfig& config, double theta_true,
                                  const ExamineeStreams& streams) {
  config.validate();
  TestSession session(pool, config, streams);
  UniformStream responses = streams.responses();
  Transcript t;
  for (int k = 1; k <= config.max_len(); ++k) {
    const std::size_t index = session.select();
    const Item& item = session.operative_pool()[index];
    const bool correct = draw_response(responses, item, theta_true);
    const StageRecord& s = session.record(index, correct);
    const Decision d = decide(config, k, s);
    t.items.push_back(item.id);
    t.responses.push_back(correct);
    t.categories.push_back(item.category);
    t.estimates.push_back(s.estimate);
    t.decisions.push_back(d);
    if (d != Decision::Continue) {
      t.final_decision = d;
      return t;
    }
  }
  throw std::logic_error("stopping rule did not terminate at the maximum length");
}

// ---------------------------------------------------------------------------
// Full paths

struct Path {
  std::vector<StageRecord> stages;  // always max_len entries

  std::vector<ScoredResponse> responses() const {
    std::vector<ScoredResponse> r;
    r.reserve(stages.size());
    for (const auto& s : stages) r.push_back(s.response);
    return r;
  }
};

inline Path simulate_path(const ItemPool& pool, const TestConfig& config, double theta_true,
                          const ExamineeStreams& streams) {
  TestSession session(pool, config, streams);
  UniformStream responses = streams.responses();
  Path path;
  path.stages.reserve(static_cast<std::size_t>(config.max_len()));
  for (int k = 1; k <= config.max_len(); ++k) {
    const std::size_t index = session.select();
    const bool correct = draw_response(responses, session.operative_pool()[index], theta_true);
    path.stages.push_back(session.record(index, correct));
  }
  return path;
}

inline std::vector<Path> simulate_paths(const ItemPool& pool, const TestConfig& config, double theta_true,
                                        std::size_t replications, std::uint64_t master_seed, unsigned workers) {
  config.hyps.validate();
  config.clamp.validate();
  std::vector<Path> paths(replications);
  parallel_for(replications, workers, [&](std::size_t r) {
    paths[r] = simulate_path(pool, config, theta_true, ExamineeStreams{master_seed, r});
  });
  return paths;
}

struct Outcome {
  Decision decision = Decision::Continue;
  int length = 0;
};

inline Outcome evaluate_path(const Path& path, const TestConfig& config) {
  const int n = std::min<int>(config.max_len(), static_cast<int>(path.stages.size()));
  for (int k = 1; k <= n; ++k) {
    const Decision d = decide(config, k, path.stages[static_cast<std::size_t>(k - 1)]);
    if (d != Decision::Continue) return {d, k};
  }
  throw std::logic_error("path shorter than the maximum test length");
}

// ---------------------------------------------------------------------------
// Operating characteristics

struct OcRow {
  double theta = 0.0;
  double avg_length = 0.0;
  double se_length = 0.0;
  double power = 0.0;  // fraction classified non-master
  double se_power = 0.0;
  std::size_t reps = 0;
};

struct OperatingCharacteristics {
  std::string rule;
  std::vector<OcRow> rows;
};

inline OcRow summarize_outcomes(double theta, const std::vector<Outcome>& outcomes) {
  OcRow row;
  row.theta = theta;
  row.reps = outcomes.size();
  if (outcomes.empty()) return row;
  const double r = static_cast<double>(outcomes.size());
  double sum = 0.0;
  double rejections = 0.0;
  for (const auto& o : outcomes) {
    sum += o.length;
    if (o.decision == Decision::RejectH0) rejections += 1.0;
  }
  row.avg_length = sum / r;
  double ss = 0.0;
  for (const auto& o : outcomes) ss += (o.length - row.avg_length) * (o.length - row.avg_length);
  row.se_length = outcomes.size() > 1 ? std::sqrt(ss / (r - 1.0) / r) : 0.0;
  row.power = rejections / r;
  row.se_power = std::sqrt(row.power * (1.0 - row.power) / r);
  return row;
}

inline OperatingCharacteristics operating_characteristics(const ItemPool& pool, const TestConfig& config,
                                                          const std::vector<double>& theta_grid,
                                                          std::size_t replications, std::uint64_t master_seed,
                                                          unsigned workers = 0) {
  if (replications < 1) throw std::invalid_argument("operating_characteristics: replications must be >= 1");
  config.validate();
  OperatingCharacteristics oc;
  oc.rule = config.name();
  for (double theta : theta_grid) {
    std::vector<Outcome> outcomes(replications);
    parallel_for(replications, workers, [&](std::size_t r) {
      const Transcript t = administer_test(pool, config, theta, ExamineeStreams{master_seed, r});
      outcomes[r] = {t.final_decision, t.length()};
    });
    oc.rows.push_back(summarize_outcomes(theta, outcomes));
  }
  return oc;
}

/// Operating characteristics of several rules on shared examinee streams.
/// Rules with the same path design share one simulated path per replication.
inline std::vector<OperatingCharacteristics> compare_tests(const ItemPool& pool, const std::vector<TestConfig>& configs,
                                                           const std::vector<double>& theta_grid,
                                                           std::size_t replications, std::uint64_t master_seed,
                                                           unsigned workers = 0) {
  if (configs.empty()) throw std::invalid_argument("compare_tests: no configurations");
  if (replications < 1) throw std::invalid_argument("compare_tests: replications must be >= 1");
  const Hypotheses& h0 = configs.front().hyps;
  for (const auto& c : configs) {
    c.validate();
    const Hypotheses& h = c.hyps;
    const bool implied_match =
        h.theta_implied == h0.theta_implied || (!h.has_implied() && !h0.has_implied());
    if (h.theta_plus != h0.theta_plus || h.theta_minus != h0.theta_minus || h.theta_cut != h0.theta_cut ||
        !implied_match || c.max_len() != configs.front().max_len())
      throw std::invalid_argument("compare_tests: configurations must share hypotheses and maximum length");
  }

  // group configurations by path design
  std::vector<std::size_t> group_of(configs.size());
  std::vector<std::size_t> leaders;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    std::size_t g = 0;
    while (g < leaders.size() && !same_path_design(configs[leaders[g]], configs[i])) ++g;
    if (g == leaders.size()) leaders.push_back(i);
    group_of[i] = g;
  }

  std::vector<OperatingCharacteristics> result(configs.size());
  for (std::size_t i = 0; i < configs.size(); ++i) result[i].rule = configs[i].name();
  for (double theta : theta_grid) {
    std::vector<std::vector<Outcome>> outcomes(configs.size(), std::vector<Outcome>(replications));
    parallel_for(replications, workers, [&](std::size_t r) {
      const ExamineeStreams streams{master_seed, r};
      for (std::size_t g = 0; g < leaders.size(); ++g) {
        const Path path = simulate_path(pool, configs[leaders[g]], theta, streams);
        for (std::size_t i = 0; i < configs.size(); ++i)
          if (group_of[i] == g) outcomes[i][r] = evaluate_path(path, configs[i]);
      }
    });
    for (std::size_t i = 0; i < configs.size(); ++i) result[i].rows.push_back(summarize_outcomes(theta, outcomes[i]));
  }
  return result;
}

/// The eleven-point ability grid used for the operational pool's hypotheses,
/// or a uniform 11-point grid from theta_minus - 0.5 to theta_plus + 0.5.
inline std::vector<double> default_theta_grid(const Hypotheses& h) {
  auto near = [](double x, double y) { return std::abs(x - y) < 1e-9; };
  std::vector<double> grid;
  if (near(h.theta_plus, -1.07) && near(h.theta_minus, -1.57) && near(h.theta_cut, -1.32) && h.has_implied()) {
    grid = {-2.0, h.theta_implied, -1.75, h.theta_minus, -1.5, h.theta_cut, -1.25, h.theta_plus, -1.0, -0.75, -0.5};
    std::sort(grid.begin(), grid.end());
    return grid;
  }
  const double lo = h.theta_minus - 0.5;
  const double hi = h.theta_plus + 0.5;
  for (int i = 0; i <= 10; ++i) grid.push_back(lo + (hi - lo) * i / 10.0);
  return grid;
}

}  // namespace cmt

#endif  // CMT_SIM_ENGINE_HPP
