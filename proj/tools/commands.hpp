// Command implementations behind the cmt executable. Each returns normally on
// success and throws on any failure; main() maps exceptions to exit codes.

#ifndef CMT_TOOLS_COMMANDS_HPP
#define CMT_TOOLS_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "calibration_report.hpp"
#include "cmt/cmt.hpp"
#include "run_config.hpp"

namespace cmt::cli {

/// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> workers;
  std::optional<std::filesystem::path> out;
};

// Stream tags separating the calibration and simulation seeds.
inline constexpr std::uint64_t kCalibrateTag = 0xCA11B;
inline constexpr std::uint64_t kSimulateTag = 0x51A;

inline void apply(RunConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seed = *o.seed;
  if (o.workers) cfg.workers = *o.workers;
}

inline ItemPool load_pool(const RunConfig& cfg) {
  if (cfg.pool.path) return read_pool_csv(cfg.pool.path->string());
  return synth_pool(cfg.pool.size, cfg.pool.seed, cfg.pool.spec);
}

/// Short identification of the pool, stored in calibration reports and
/// compared by simulate.
inline std::string describe_pool(const RunConfig& cfg, const ItemPool& pool) {
  if (cfg.pool.path) return "file " + cfg.pool.path->filename().string() + " items " + std::to_string(pool.size());
  return "synthetic size " + std::to_string(cfg.pool.size) + " seed " + std::to_string(cfg.pool.seed) +
         " categories " + std::to_string(cfg.pool.spec.categories);
}

// ---------------------------------------------------------------------------
// pool

inline void cmd_pool_generate(std::size_t size, std::uint64_t seed, int categories, const std::filesystem::path& out) {
  SyntheticPoolSpec spec;
  spec.categories = categories;
  write_pool_csv(out.string(), synth_pool(size, seed, spec));
}

inline void cmd_pool_validate(const std::filesystem::path& path, std::ostream& out) {
  print_summary(out, summarize(read_pool_csv(path.string())));
}

// ---------------------------------------------------------------------------
// calibrate

inline CalibrationReport run_calibration(const RunConfig& cfg, const ItemPool& pool) {
  TestConfig design = cfg.design_config();
  CalibrationSettings settings = cfg.calibration;
  settings.seed = derive_seed(cfg.seed, 0, kCalibrateTag);
  settings.workers = cfg.workers;

  CalibrationReport report;
  report.method = cfg.method == CalibrationMethod::MonteCarlo ? "monte_carlo" : "closed_form";
  report.seed = cfg.seed;
  report.replications = settings.replications;
  report.max_len = design.max_len();
  report.min_stage = design.thresholds.min_stage;
  report.epsilon = settings.epsilon;
  report.pool = describe_pool(cfg, pool);

  const Hypotheses& h = design.hyps;
  if (!h.has_implied()) {
    const Routine1Result r1 = routine1_implied_alternative(pool, design, settings);
    design.hyps.theta_implied = r1.theta_implied;
    report.c_fixed_implied = r1.c_fixed;
    report.achieved.push_back({"implied_type1", r1.type1});
    report.achieved.push_back({"implied_type2", r1.type2});
    report.traces.push_back({"implied_alternative", r1.trace});
  }
  report.hyps = design.hyps;

  if (cfg.method == CalibrationMethod::MonteCarlo) {
    const Routine2Result r2 = routine2_thresholds(pool, design, settings);
    report.A = r2.A;
    report.B = r2.B;
    report.C = r2.C;
    report.achieved.push_back({"early_accept", r2.early_accept});
    report.achieved.push_back({"early_reject", r2.early_reject});
    report.achieved.push_back({"terminal_reject", r2.terminal_reject});
    report.traces.push_back({"B", r2.trace_b});
    report.traces.push_back({"A", r2.trace_a});
    report.traces.push_back({"C", r2.trace_c});
  } else {
    const ThresholdTriple t =
        solve_thresholds_siegmund(h.alpha, h.beta, settings.epsilon, design.max_len(), design.thresholds.min_stage);
    report.A = t.A;
    report.B = t.B;
    report.C = t.C;
  }

  if (cfg.calibrate_comparators) {
    const std::vector<Path> at_plus =
        simulate_paths(pool, design, h.theta_plus, settings.replications, settings.seed, settings.workers);
    TestConfig fixed = design;
    fixed.rule = RuleKind::Fixed;
    const BisectResult fc = calibrate_terminal_c(at_plus, fixed, h.alpha, settings.prob_tolerance);
    report.fixed_C = fc.root;
    report.achieved.push_back({"fixed_type1", achieved(fc.value, settings.replications)});
    report.traces.push_back({"fixed_C", fc.trace});

    TestConfig modtsprt = design;
    modtsprt.rule = RuleKind::ModTSPRT;
    std::tie(modtsprt.thresholds.A, modtsprt.thresholds.B) = wald_thresholds(h.alpha, h.beta);
    const BisectResult mc = calibrate_terminal_c(at_plus, modtsprt, h.alpha, settings.prob_tolerance);
    report.modtsprt_C = mc.root;
    report.achieved.push_back({"modtsprt_type1", achieved(mc.value, settings.replications)});
    report.traces.push_back({"modtsprt_C", mc.trace});
  }
  return report;
}

inline std::filesystem::path cmd_calibrate(const std::filesystem::path& config_path, const Overrides& overrides,
                                           std::ostream& out) {
  RunConfig cfg = load_run_config(config_path);
  apply(cfg, overrides);
  const ItemPool pool = load_pool(cfg);
  const CalibrationReport report = run_calibration(cfg, pool);
  const std::filesystem::path target = overrides.out.value_or(cfg.calibration_report);
  write_calibration_report(target, report);
  using cmt::detail::format_double;
  out << "theta_implied " << format_double(report.hyps.theta_implied) << '\n'
      << "A " << format_double(report.A) << '\n'
      << "B " << format_double(report.B) << '\n'
      << "C " << format_double(report.C) << '\n';
  return target;
}

// ---------------------------------------------------------------------------
// simulate

namespace detail {

inline bool needs_report(const RunConfig& cfg) {
  if (cfg.implied_from_report) return true;
  for (const auto& rule : cfg.rules) {
    if (rule.kind == RuleKind::ModHP && !cfg.hyps.has_implied()) return true;
    for (const auto* t : {&rule.A, &rule.B, &rule.C})
      if (t->source == ThresholdSpec::Source::Calibrated) return true;
  }
  return false;
}

inline void check_report_matches(const CalibrationReport& r, const RunConfig& cfg, const ItemPool& pool) {
  auto mismatch = [&](const std::string& what) {
    throw ConfigError("calibration report does not match the config (" + what + "); rerun calibrate");
  };
  const Hypotheses& h = cfg.hyps;
  if (r.hyps.theta_plus != h.theta_plus || r.hyps.theta_minus != h.theta_minus || r.hyps.theta_cut != h.theta_cut)
    mismatch("hypotheses");
  if (r.hyps.alpha != h.alpha || r.hyps.beta != h.beta) mismatch("alpha or beta");
  if (h.has_implied() && r.hyps.theta_implied != h.theta_implied) mismatch("theta_implied");
  if (r.max_len != cfg.design.max_len || r.min_stage != cfg.design.min_stage) mismatch("test length");
  if (r.pool != describe_pool(cfg, pool)) mismatch("item pool");
}

inline double resolve_threshold(const ThresholdSpec& spec, const RuleSpec& rule, char which, double wald_value,
                                const std::optional<CalibrationReport>& report, double a, double b,
                                bool overridden_levels) {
  using Src = ThresholdSpec::Source;
  const std::string key = rule.section + "." + which;
  switch (spec.source) {
    case Src::Number: return spec.value;
    case Src::Wald:
      if (which == 'C') throw ConfigError(key + ": wald applies to A and B only");
      return wald_value;
    case Src::Truncation:
      if (which != 'C') throw ConfigError(key + ": truncation applies to C only");
      if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigError(key + ": truncation needs finite A and B");
      return tsprt_truncation_c(a, b);
    case Src::Calibrated: break;
  }
  if (!report) throw std::logic_error("calibrated threshold without a report");
  if (rule.kind == RuleKind::ModHP) return which == 'A' ? report->A : which == 'B' ? report->B : report->C;
  if (which != 'C') throw ConfigError(key + ": only modhp rules have calibrated A and B");
  if (overridden_levels) throw ConfigError(key + ": calibrated C requires the hypotheses' alpha and beta");
  std::optional<double> c;
  if (rule.kind == RuleKind::Fixed) c = report->fixed_C;
  if (rule.kind == RuleKind::ModTSPRT) c = report->modtsprt_C;
  if (!c) throw ConfigError(key + ": the calibration report has no calibrated C for " + to_string(rule.kind));
  return *c;
}

}  // namespace detail

/// Resolves every rule in the config to a concrete test configuration.
inline std::vector<TestConfig> build_rules(const RunConfig& cfg, const ItemPool& pool) {
  if (cfg.rules.empty()) throw ConfigError("no rules to simulate (add [rule.NAME] sections)");
  std::optional<CalibrationReport> report;
  Hypotheses hyps = cfg.hyps;
  if (detail::needs_report(cfg)) {
    report = read_calibration_report(cfg.calibration_report);
    detail::check_report_matches(*report, cfg, pool);
    if (!hyps.has_implied() || cfg.implied_from_report) hyps.theta_implied = report->hyps.theta_implied;
  }
  std::vector<TestConfig> configs;
  for (const auto& rule : cfg.rules) {
    TestConfig c = cfg.design_config();
    c.hyps = hyps;
    c.rule = rule.kind;
    c.label = rule.label;
    const double alpha = rule.alpha.value_or(hyps.alpha);
    const double beta = rule.beta.value_or(hyps.beta);
    const bool overridden = rule.alpha.has_value() || rule.beta.has_value();
    const auto [wald_a, wald_b] = wald_thresholds(alpha, beta);
    auto& t = c.thresholds;
    t.A = detail::resolve_threshold(rule.A, rule, 'A', wald_a, report, 0.0, 0.0, overridden);
    t.B = detail::resolve_threshold(rule.B, rule, 'B', wald_b, report, 0.0, 0.0, overridden);
    t.C = detail::resolve_threshold(rule.C, rule, 'C', 0.0, report, t.A, t.B, overridden);
    try {
      c.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError("[" + rule.section + "]: " + e.what());
    }
    configs.push_back(std::move(c));
  }
  return configs;
}

struct SimulationRun {
  std::vector<OperatingCharacteristics> results;
  std::filesystem::path csv;
};

inline SimulationRun cmd_simulate(const std::filesystem::path& config_path, const Overrides& overrides,
                                  std::ostream& out) {
  RunConfig cfg = load_run_config(config_path);
  apply(cfg, overrides);
  const ItemPool pool = load_pool(cfg);
  const std::vector<TestConfig> configs = build_rules(cfg, pool);
  const Hypotheses& h = configs.front().hyps;
  const std::vector<double> grid = cfg.theta_grid.empty() ? default_theta_grid(h) : cfg.theta_grid;

  SimulationRun run;
  run.results = compare_tests(pool, configs, grid, cfg.replications, derive_seed(cfg.seed, 1, kSimulateTag),
                              cfg.workers);
  run.csv = overrides.out.value_or(cfg.output.empty() ? cfg.source.parent_path() / "oc.csv" : cfg.output);
  std::ofstream csv(run.csv);
  if (!csv) throw std::runtime_error("cannot write report " + run.csv.string());
  write_oc_csv(csv, run.results);
  if (!csv.flush()) throw std::runtime_error("failed writing report " + run.csv.string());

  if (cfg.layout == "sweep")
    print_sweep_table(out, run.results);
  else
    print_oc_table(out, run.results, h.theta_plus);
  return run;
}

}  // namespace cmt::cli

#endif  // CMT_TOOLS_COMMANDS_HPP
