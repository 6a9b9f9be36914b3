// Calibration report: the inputs a calibration depended on, the calibrated
// implied alternative and thresholds, achieved probabilities and probe traces,
// stored as an INI-style key = value file that `simulate` reads back.

#ifndef CMT_TOOLS_CALIBRATION_REPORT_HPP
#define CMT_TOOLS_CALIBRATION_REPORT_HPP

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "cmt/cmt.hpp"
#include "run_config.hpp"

namespace cmt::cli {

inline constexpr int kReportVersion = 1;

struct CalibrationReport {
  // inputs
  std::string method;
  std::uint64_t seed = 0;
  std::size_t replications = 0;
  Hypotheses hyps;  // theta_implied holds the calibrated value
  int max_len = 0;
  int min_stage = 0;
  double epsilon = 0.0;
  std::string pool;

  // results
  std::optional<double> c_fixed_implied;  // level-alpha cutoff of the test against theta_implied
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
  std::optional<double> fixed_C;
  std::optional<double> modtsprt_C;

  std::vector<std::pair<std::string, AchievedProbability>> achieved;
  std::vector<std::pair<std::string, std::vector<ProbePoint>>> traces;
};

namespace detail {

inline std::string join_trace(const std::vector<ProbePoint>& trace) {
  std::string out;
  for (const auto& p : trace) {
    if (!out.empty()) out += ' ';
    out += cmt::detail::format_double(p.x) + ':' + cmt::detail::format_double(p.value);
  }
  return out;
}

}  // namespace detail

inline void write_calibration_report(std::ostream& out, const CalibrationReport& r) {
  using cmt::detail::format_double;
  boost::property_tree::ptree root;
  auto& in = root.put_child("inputs", {});
  in.put("version", kReportVersion);
  in.put("method", r.method);
  in.put("seed", r.seed);
  in.put("replications", r.replications);
  in.put("pool", r.pool);
  in.put("theta_plus", format_double(r.hyps.theta_plus));
  in.put("theta_minus", format_double(r.hyps.theta_minus));
  in.put("theta_cut", format_double(r.hyps.theta_cut));
  in.put("alpha", format_double(r.hyps.alpha));
  in.put("beta", format_double(r.hyps.beta));
  in.put("epsilon", format_double(r.epsilon));
  in.put("max_len", r.max_len);
  in.put("min_stage", r.min_stage);

  auto& th = root.put_child("thresholds", {});
  th.put("theta_implied", format_double(r.hyps.theta_implied));
  if (r.c_fixed_implied) th.put("c_fixed_implied", format_double(*r.c_fixed_implied));
  th.put("A", format_double(r.A));
  th.put("B", format_double(r.B));
  th.put("C", format_double(r.C));
  if (r.fixed_C) th.put("fixed_C", format_double(*r.fixed_C));
  if (r.modtsprt_C) th.put("modtsprt_C", format_double(*r.modtsprt_C));

  if (!r.achieved.empty()) {
    auto& ach = root.put_child("achieved", {});
    for (const auto& [name, p] : r.achieved) {
      ach.put(name, format_double(p.value));
      ach.put(name + "_se", format_double(p.standard_error));
    }
  }
  if (!r.traces.empty()) {
    auto& tr = root.put_child("trace", {});
    for (const auto& [name, trace] : r.traces) tr.put(name, detail::join_trace(trace));
  }
  boost::property_tree::ini_parser::write_ini(out, root);
}

inline void write_calibration_report(const std::filesystem::path& path, const CalibrationReport& r) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write calibration report " + path.string());
  write_calibration_report(out, r);
}

/// Reads the thresholds and inputs back; traces and achieved probabilities are
/// informational and not parsed.
inline CalibrationReport read_calibration_report(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ConfigError("calibration report not found: " + path.string() + " (run the calibrate command first)");
  boost::property_tree::ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError("cannot parse calibration report " + path.string() + ": " + e.message());
  }
  auto get = [&](const std::string& key) -> std::string {
    auto v = root.get_optional<std::string>(key);
    if (!v) throw ConfigError("calibration report " + path.string() + " lacks " + key);
    return *v;
  };
  auto number = [&](const std::string& key) { return detail::parse_double(get(key), key); };
  auto optional_number = [&](const std::string& key) -> std::optional<double> {
    if (!root.get_optional<std::string>(key)) return std::nullopt;
    return number(key);
  };

  if (detail::parse_integer<int>(get("inputs.version"), "inputs.version") != kReportVersion)
    throw ConfigError("calibration report " + path.string() + " has an unsupported version");
  CalibrationReport r;
  r.method = get("inputs.method");
  r.seed = detail::parse_integer<std::uint64_t>(get("inputs.seed"), "inputs.seed");
  r.replications = detail::parse_integer<std::size_t>(get("inputs.replications"), "inputs.replications");
  r.pool = get("inputs.pool");
  r.hyps.theta_plus = number("inputs.theta_plus");
  r.hyps.theta_minus = number("inputs.theta_minus");
  r.hyps.theta_cut = number("inputs.theta_cut");
  r.hyps.alpha = number("inputs.alpha");
  r.hyps.beta = number("inputs.beta");
  r.epsilon = number("inputs.epsilon");
  r.max_len = detail::parse_integer<int>(get("inputs.max_len"), "inputs.max_len");
  r.min_stage = detail::parse_integer<int>(get("inputs.min_stage"), "inputs.min_stage");
  r.hyps.theta_implied = number("thresholds.theta_implied");
  r.c_fixed_implied = optional_number("thresholds.c_fixed_implied");
  r.A = number("thresholds.A");
  r.B = number("thresholds.B");
  r.C = number("thresholds.C");
  r.fixed_C = optional_number("thresholds.fixed_C");
  r.modtsprt_C = optional_number("thresholds.modtsprt_C");
  return r;
}

}  // namespace cmt::cli

#endif  // CMT_TOOLS_CALIBRATION_REPORT_HPP
