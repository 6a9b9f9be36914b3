// Operating-characteristic reports: CSV rows and fixed-width console tables.

#ifndef CMT_REPORT_HPP
#define CMT_REPORT_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cmt/item_pool_io.hpp"
#include "cmt/sim_engine.hpp"

namespace cmt {

inline constexpr const char* kOcCsvHeader = "theta,avg_length,se_length,power,se_power,reps,rule";

namespace detail {

inline std::string fixed(double x, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
  return buf;
}

inline void check_aligned(const std::vector<OperatingCharacteristics>& results) {
  if (results.empty()) throw std::invalid_argument("report: no operating characteristics");
  for (const auto& oc : results) {
    if (oc.rows.size() != results.front().rows.size())
      throw std::invalid_argument("report: rules evaluated on different ability grids");
    for (std::size_t i = 0; i < oc.rows.size(); ++i)
      if (oc.rows[i].theta != results.front().rows[i].theta)
        throw std::invalid_argument("report: rules evaluated on different ability grids");
  }
}

/// Row order by ascending theta (stable for equal values).
inline std::vector<std::size_t> theta_order(const OperatingCharacteristics& oc) {
  std::vector<std::size_t> order(oc.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t l, std::size_t r) { return oc.rows[l].theta < oc.rows[r].theta; });
  return order;
}

}  // namespace detail

/// One row per (theta, rule): theta ascending, rules in the given order.
inline void write_oc_csv(std::ostream& out, const std::vector<OperatingCharacteristics>& results) {
  detail::check_aligned(results);
  out << kOcCsvHeader << '\n';
  for (std::size_t i : detail::theta_order(results.front())) {
    for (const auto& oc : results) {
      const OcRow& row = oc.rows[i];
      out << detail::format_double(row.theta) << ',' << detail::fixed(row.avg_length, 6) << ','
          << detail::fixed(row.se_length, 6) << ',' << detail::fixed(row.power, 6) << ','
          << detail::fixed(row.se_power, 6) << ',' << row.reps << ',' << oc.rule << '\n';
    }
  }
}

/// Average length and power (percent, in parentheses) per ability and rule;
/// the row at theta_plus is marked with '*'.
inline void print_oc_table(std::ostream& out, const std::vector<OperatingCharacteristics>& results,
                           double theta_plus) {
  detail::check_aligned(results);
  constexpr int width = 16;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  out << pad("theta", 9);
  for (const auto& oc : results) out << pad(oc.rule, width);
  out << '\n';
  for (std::size_t i : detail::theta_order(results.front())) {
    const double theta = results.front().rows[i].theta;
    const bool flagged = std::abs(theta - theta_plus) < 1e-9;
    out << (flagged ? '*' : ' ') << pad(detail::fixed(theta, 3), 8);
    for (const auto& oc : results) {
      const OcRow& row = oc.rows[i];
      out << pad(detail::fixed(row.avg_length, 1) + " (" + detail::fixed(100.0 * row.power, 2) + "%)", width);
    }
    out << '\n';
  }
}

/// Transposed layout for sweeps over one rule family: one column per rule,
/// rows for the rejection probability and average length at each ability.
inline void print_sweep_table(std::ostream& out, const std::vector<OperatingCharacteristics>& results) {
  detail::check_aligned(results);
  constexpr std::size_t width = 12;
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  for (std::size_t i : detail::theta_order(results.front())) {
    const std::string theta = detail::fixed(results.front().rows[i].theta, 3);
    out << pad("theta " + theta, 24);
    for (const auto& oc : results) out << pad(oc.rule, width);
    out << '\n' << pad("P(reject H0)", 24);
    for (const auto& oc : results) out << pad(detail::fixed(oc.rows[i].power, 3), width);
    out << '\n' << pad("average length", 24);
    for (const auto& oc : results) out << pad(detail::fixed(oc.rows[i].avg_length, 1), width);
    out << '\n';
  }
}

}  // namespace cmt

#endif  // CMT_REPORT_HPP
