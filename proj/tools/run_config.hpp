// Run configuration: a versioned INI file with sections for the pool,
// hypotheses, test design, calibration, simulation and one section per rule.

#ifndef CMT_TOOLS_RUN_CONFIG_HPP
#define CMT_TOOLS_RUN_CONFIG_HPP

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmt/cmt.hpp"

namespace cmt::cli {

inline constexpr int kConfigVersion = 1;

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A threshold given as a number or as a keyword resolved later.
struct ThresholdSpec {
  enum class Source { Number, Wald, Truncation, Calibrated };
  Source source = Source::Number;
  double value = 0.0;
};

struct RuleSpec {
  std::string section;  // e.g. "rule.modhp"
  std::string label;
  RuleKind kind = RuleKind::ModHP;
  std::optional<double> alpha;  // overrides for Wald thresholds
  std::optional<double> beta;
  ThresholdSpec A, B, C;
};

struct PoolSource {
  std::optional<std::filesystem::path> path;
  std::size_t size = 1136;
  std::uint64_t seed = 1;
  SyntheticPoolSpec spec;
};

enum class CalibrationMethod { MonteCarlo, ClosedForm };

struct RunConfig {
  std::filesystem::path source;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::filesystem::path output;

  PoolSource pool;
  Hypotheses hyps;
  bool implied_from_report = false;

  Thresholds design;  // max_len and min_stage
  SelectionRule selection;
  ClampInterval clamp;
  std::optional<ContentConstraints> constraints;

  CalibrationMethod method = CalibrationMethod::MonteCarlo;
  CalibrationSettings calibration;
  bool calibrate_comparators = true;
  std::filesystem::path calibration_report;

  std::size_t replications = 10'000;
  std::vector<double> theta_grid;  // empty: default grid
  std::string layout = "grid";
  std::vector<RuleSpec> rules;

  /// Design shared by every rule: selection, constraints, clamp and lengths.
  TestConfig design_config() const {
    TestConfig c;
    c.rule = RuleKind::Fixed;
    c.hyps = hyps;
    c.thresholds = design;
    c.selection = selection;
    c.constraints = constraints;
    c.clamp = clamp;
    return c;
  }
};

namespace detail {

using boost::property_tree::ptree;

inline double parse_double(const std::string& text, const std::string& key) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last)
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  return value;
}

template <class Int>
Int parse_integer(const std::string& text, const std::string& key) {
  Int value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (text.empty() || ec != std::errc() || ptr != last)
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return value;
}

inline bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "yes" || text == "1") return true;
  if (text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

inline std::vector<double> parse_list(const std::string& text, const std::string& key) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError(key + ": empty list entry");
    values.push_back(parse_double(item.substr(b, e - b + 1), key));
  }
  if (values.empty()) throw ConfigError(key + ": empty list");
  return values;
}

inline std::vector<std::string> parse_names(const std::string& text) {
  std::vector<std::string> names;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) names.push_back(item.substr(b, e - b + 1));
  }
  return names;
}

/// Reads keys of one section and rejects any that are not listed.
class Section {
 public:
  Section(const ptree* tree, std::string name, std::set<std::string> allowed)
      : tree_(tree), name_(std::move(name)) {
    if (!tree_) return;
    for (const auto& [key, value] : *tree_)
      if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in section [" + name_ + "]");
  }

  bool present() const { return tree_ != nullptr; }

  std::optional<std::string> text(const std::string& key) const {
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    return *v;
  }

  std::string qualified(const std::string& key) const { return name_ + "." + key; }

  std::optional<double> number(const std::string& key) const {
    auto t = text(key);
    if (!t) return std::nullopt;
    return parse_double(*t, qualified(key));
  }

  template <class Int>
  std::optional<Int> integer(const std::string& key) const {
    auto t = text(key);
    if (!t) return std::nullopt;
    return parse_integer<Int>(*t, qualified(key));
  }

  std::string required_text(const std::string& key) const {
    auto t = text(key);
    if (!t) throw ConfigError("missing required key " + qualified(key));
    return *t;
  }

 private:
  const ptree* tree_;
  std::string name_;
};

inline ThresholdSpec parse_threshold(const std::optional<std::string>& text, ThresholdSpec fallback,
                                     const std::string& key) {
  if (!text) return fallback;
  if (*text == "wald") return {ThresholdSpec::Source::Wald, 0.0};
  if (*text == "truncation") return {ThresholdSpec::Source::Truncation, 0.0};
  if (*text == "calibrated") return {ThresholdSpec::Source::Calibrated, 0.0};
  return {ThresholdSpec::Source::Number, parse_double(*text, key)};
}

inline RuleKind parse_rule_kind(const std::string& text, const std::string& key) {
  if (text == "fixed") return RuleKind::Fixed;
  if (text == "sprt") return RuleKind::SPRT;
  if (text == "tsprt") return RuleKind::TSPRT;
  if (text == "modtsprt") return RuleKind::ModTSPRT;
  if (text == "modhp") return RuleKind::ModHP;
  throw ConfigError(key + ": unknown rule kind '" + text + "' (fixed, sprt, tsprt, modtsprt, modhp)");
}

inline SelectionKind parse_selection(const std::string& text, const std::string& key) {
  if (text == "fisher_mle") return SelectionKind::MaxFisherAtMle;
  if (text == "fisher_cut") return SelectionKind::MaxFisherAtCut;
  if (text == "kl") return SelectionKind::MaxKlAtEstimate;
  throw ConfigError(key + ": unknown selection rule '" + text + "' (fisher_mle, fisher_cut, kl)");
}

inline const ptree* child(const ptree& root, const std::string& name) {
  auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

/// Parses a configuration from `in`; relative paths resolve against `base`.
inline RunConfig parse_run_config(std::istream& in, const std::filesystem::path& base,
                                  const std::filesystem::path& source = {}) {
  using detail::Section;
  // the INI reader drops sections without keys, so headers are collected separately
  const std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  std::vector<std::string> headers;
  {
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      const auto b = line.find_first_not_of(" \t");
      const auto e = line.find(']');
      if (b != std::string::npos && line[b] == '[' && e != std::string::npos && e > b) {
        std::string name = line.substr(b + 1, e - b - 1);
        const auto nb = name.find_first_not_of(" \t");
        const auto ne = name.find_last_not_of(" \t");
        headers.push_back(nb == std::string::npos ? std::string() : name.substr(nb, ne - nb + 1));
      }
    }
  }
  detail::ptree root;
  try {
    std::istringstream parse_in(text);
    boost::property_tree::ini_parser::read_ini(parse_in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  static const std::set<std::string> sections = {"run",         "pool",      "hypotheses", "test",
                                                  "constraints", "calibration", "simulate"};
  for (const auto& [name, tree] : root)
    if (tree.empty() && !tree.data().empty()) throw ConfigError("key '" + name + "' outside any section");
  for (const auto& name : headers)
    if (!sections.contains(name) && name.rfind("rule.", 0) != 0) throw ConfigError("unknown section [" + name + "]");
  auto declared = [&](const std::string& name) {
    return std::find(headers.begin(), headers.end(), name) != headers.end();
  };

  RunConfig cfg;
  cfg.source = source;

  const Section run(detail::child(root, "run"), "run", {"version", "seed", "workers", "output"});
  if (!run.present()) throw ConfigError("missing [run] section");
  const int version = run.integer<int>("version").value_or(-1);
  if (version == -1) throw ConfigError("missing required key run.version");
  if (version != kConfigVersion)
    throw ConfigError("unsupported config version " + std::to_string(version) + " (this build reads version " +
                      std::to_string(kConfigVersion) + ")");
  const auto seed = run.integer<std::uint64_t>("seed");
  if (!seed) throw ConfigError("missing required key run.seed");
  cfg.seed = *seed;
  cfg.workers = run.integer<unsigned>("workers").value_or(0);
  if (auto out = run.text("output")) cfg.output = detail::resolve(base, *out);

  const Section pool(detail::child(root, "pool"), "pool",
                     {"path", "size", "seed", "categories", "a_median", "a_log_sd", "a_min", "a_max", "b_mean", "b_sd",
                      "b_min", "b_max", "c_shape1", "c_shape2", "c_min", "c_max"});
  if (auto p = pool.text("path")) {
    cfg.pool.path = detail::resolve(base, *p);
    if (!std::filesystem::exists(*cfg.pool.path))
      throw ConfigError("pool.path: file not found: " + cfg.pool.path->string());
  }
  cfg.pool.size = pool.integer<std::size_t>("size").value_or(1136);
  cfg.pool.seed = pool.integer<std::uint64_t>("seed").value_or(cfg.seed);
  auto& spec = cfg.pool.spec;
  spec.categories = pool.integer<int>("categories").value_or(0);
  spec.a_median = pool.number("a_median").value_or(spec.a_median);
  spec.a_log_sd = pool.number("a_log_sd").value_or(spec.a_log_sd);
  spec.a_min = pool.number("a_min").value_or(spec.a_min);
  spec.a_max = pool.number("a_max").value_or(spec.a_max);
  spec.b_mean = pool.number("b_mean").value_or(spec.b_mean);
  spec.b_sd = pool.number("b_sd").value_or(spec.b_sd);
  spec.b_min = pool.number("b_min").value_or(spec.b_min);
  spec.b_max = pool.number("b_max").value_or(spec.b_max);
  spec.c_shape1 = pool.number("c_shape1").value_or(spec.c_shape1);
  spec.c_shape2 = pool.number("c_shape2").value_or(spec.c_shape2);
  spec.c_min = pool.number("c_min").value_or(spec.c_min);
  spec.c_max = pool.number("c_max").value_or(spec.c_max);

  const Section hyps(detail::child(root, "hypotheses"), "hypotheses",
                     {"theta_plus", "theta_minus", "theta_cut", "theta_implied", "alpha", "beta"});
  cfg.hyps.theta_plus = hyps.number("theta_plus").value_or(cfg.hyps.theta_plus);
  cfg.hyps.theta_minus = hyps.number("theta_minus").value_or(cfg.hyps.theta_minus);
  cfg.hyps.theta_cut = hyps.number("theta_cut").value_or(cfg.hyps.theta_cut);
  cfg.hyps.alpha = hyps.number("alpha").value_or(cfg.hyps.alpha);
  cfg.hyps.beta = hyps.number("beta").value_or(cfg.hyps.beta);
  if (auto implied = hyps.text("theta_implied")) {
    if (*implied == "calibrated")
      cfg.implied_from_report = true;
    else
      cfg.hyps.theta_implied = detail::parse_double(*implied, "hypotheses.theta_implied");
  }
  try {
    cfg.hyps.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const Section test(detail::child(root, "test"), "test",
                     {"max_len", "min_stage", "rho", "selection", "kl_halfwidth", "clamp_lo", "clamp_hi"});
  cfg.design.max_len = test.integer<int>("max_len").value_or(50);
  if (auto m0 = test.integer<int>("min_stage")) {
    cfg.design.min_stage = *m0;
  } else if (auto rho = test.number("rho")) {
    cfg.design.min_stage = min_stage_for(*rho, cfg.design.max_len);
  } else {
    cfg.design.min_stage = min_stage_for(0.1, cfg.design.max_len);
  }
  if (auto sel = test.text("selection")) cfg.selection.kind = detail::parse_selection(*sel, "test.selection");
  cfg.selection.kl_halfwidth =
      test.number("kl_halfwidth").value_or((cfg.hyps.theta_plus - cfg.hyps.theta_minus) / 2.0);
  cfg.clamp.lo = test.number("clamp_lo").value_or(cfg.clamp.lo);
  cfg.clamp.hi = test.number("clamp_hi").value_or(cfg.clamp.hi);
  try {
    cfg.design.validate();
    cfg.clamp.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const Section constraints(detail::child(root, "constraints"), "constraints", {"proportions", "exposure_cap"});
  if (constraints.present()) {
    ContentConstraints cc;
    cc.proportions = detail::parse_list(constraints.required_text("proportions"), "constraints.proportions");
    cc.exposure_cap = constraints.number("exposure_cap").value_or(1.0);
    try {
      cc.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    cfg.constraints = cc;
  }

  const Section cal(detail::child(root, "calibration"), "calibration",
                    {"method", "replications", "prob_tolerance", "theta_tolerance", "epsilon", "report",
                     "comparators"});
  if (auto m = cal.text("method")) {
    if (*m == "monte_carlo")
      cfg.method = CalibrationMethod::MonteCarlo;
    else if (*m == "closed_form")
      cfg.method = CalibrationMethod::ClosedForm;
    else
      throw ConfigError("calibration.method: expected monte_carlo or closed_form, got '" + *m + "'");
  }
  auto& cs = cfg.calibration;
  cs.replications = cal.integer<std::size_t>("replications").value_or(cs.replications);
  cs.prob_tolerance = cal.number("prob_tolerance").value_or(cs.prob_tolerance);
  cs.theta_tolerance = cal.number("theta_tolerance").value_or(cs.theta_tolerance);
  cs.epsilon = cal.number("epsilon").value_or(cs.epsilon);
  if (auto c = cal.text("comparators")) cfg.calibrate_comparators = detail::parse_bool(*c, "calibration.comparators");
  cfg.calibration_report = detail::resolve(base, cal.text("report").value_or("calibration.txt"));
  try {
    cs.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  const Section sim(detail::child(root, "simulate"), "simulate", {"replications", "theta_grid", "rules", "layout"});
  cfg.replications = sim.integer<std::size_t>("replications").value_or(cfg.replications);
  if (cfg.replications < 1) throw ConfigError("simulate.replications must be at least 1");
  if (auto grid = sim.text("theta_grid"); grid && *grid != "default")
    cfg.theta_grid = detail::parse_list(*grid, "simulate.theta_grid");
  cfg.layout = sim.text("layout").value_or("grid");
  if (cfg.layout != "grid" && cfg.layout != "sweep")
    throw ConfigError("simulate.layout: expected grid or sweep, got '" + cfg.layout + "'");

  std::vector<std::string> rule_names;
  if (auto listed = sim.text("rules")) {
    rule_names = detail::parse_names(*listed);
  } else {
    for (const auto& name : headers)
      if (name.rfind("rule.", 0) == 0) rule_names.push_back(name.substr(5));
  }
  for (const auto& name : rule_names) {
    const std::string section = "rule." + name;
    const auto* tree = detail::child(root, section);
    if (!tree && !declared(section))
      throw ConfigError("simulate.rules names '" + name + "' but there is no [" + section + "] section");
    const Section rule(tree, section, {"kind", "label", "alpha", "beta", "A", "B", "C"});
    RuleSpec spec_rule;
    spec_rule.section = section;
    spec_rule.kind = detail::parse_rule_kind(rule.text("kind").value_or(name), rule.qualified("kind"));
    spec_rule.label = rule.text("label").value_or(name);
    spec_rule.alpha = rule.number("alpha");
    spec_rule.beta = rule.number("beta");
    using Src = ThresholdSpec::Source;
    ThresholdSpec a_default{Src::Wald, 0.0}, b_default{Src::Wald, 0.0}, c_default{Src::Truncation, 0.0};
    if (spec_rule.kind == RuleKind::ModHP) a_default = b_default = {Src::Calibrated, 0.0};
    if (spec_rule.kind == RuleKind::ModHP || spec_rule.kind == RuleKind::ModTSPRT || spec_rule.kind == RuleKind::Fixed)
      c_default = {Src::Calibrated, 0.0};
    spec_rule.A = detail::parse_threshold(rule.text("A"), a_default, rule.qualified("A"));
    spec_rule.B = detail::parse_threshold(rule.text("B"), b_default, rule.qualified("B"));
    spec_rule.C = detail::parse_threshold(rule.text("C"), c_default, rule.qualified("C"));
    cfg.rules.push_back(spec_rule);
  }
  return cfg;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_run_config(in, path.parent_path(), path);
}

}  // namespace cmt::cli

#endif  // CMT_TOOLS_RUN_CONFIG_HPP
