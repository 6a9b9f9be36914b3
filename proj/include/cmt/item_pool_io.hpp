// Item-pool CSV ingestion/emission and the synthetic pool generator.
//
// CSV layout: header `id,a,b,c,category`, one item per row. The category
// field may be left empty (treated as 0).

#ifndef CMT_ITEM_POOL_IO_HPP
#define CMT_ITEM_POOL_IO_HPP

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "cmt/irt_model.hpp"

namespace cmt {

class PoolFormatError : public std::runtime_error {
 public:
  PoolFormatError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline constexpr std::string_view kPoolCsvHeader = "id,a,b,c,category";

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <class T>
T parse_field(std::string_view field, std::size_t line, const char* name) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last)
    throw PoolFormatError(line, std::string("cannot parse ") + name + " from '" + std::string(field) + "'");
  return value;
}

inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, ptr);
}

}  // namespace detail

inline ItemPool read_pool_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::vector<Item> items;
  std::map<ItemId, std::size_t> seen;
  while (std::getline(in, line)) {
    ++line_no;
    auto view = detail::trim(line);
    if (line_no == 1 && view.size() >= 3 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (view.empty()) continue;
    if (!have_header) {
      if (view != kPoolCsvHeader)
        throw PoolFormatError(line_no, "expected header '" + std::string(kPoolCsvHeader) + "'");
      have_header = true;
      continue;
    }
    const auto fields = detail::split_csv(view);
    if (fields.size() != 5)
      throw PoolFormatError(line_no, "expected 5 fields, found " + std::to_string(fields.size()));
    Item item;
    item.id = detail::parse_field<ItemId>(fields[0], line_no, "id");
    item.a = detail::parse_field<double>(fields[1], line_no, "a");
    item.b = detail::parse_field<double>(fields[2], line_no, "b");
    item.c = detail::parse_field<double>(fields[3], line_no, "c");
    item.category = fields[4].empty() ? 0 : detail::parse_field<int>(fields[4], line_no, "category");
    try {
      validate_item(item);
    } catch (const std::invalid_argument& e) {
      throw PoolFormatError(line_no, e.what());
    }
    if (auto [it, fresh] = seen.emplace(item.id, line_no); !fresh)
      throw PoolFormatError(line_no, "duplicate item id " + std::to_string(item.id) + " (first seen on line " +
                                         std::to_string(it->second) + ")");
    items.push_back(item);
  }
  if (!have_header) throw PoolFormatError(line_no, "missing header");
  if (items.empty()) throw PoolFormatError(line_no, "pool has no items");
  return ItemPool(std::move(items));
}

inline ItemPool read_pool_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open item pool '" + path + "'");
  return read_pool_csv(in);
}

inline void write_pool_csv(std::ostream& out, const ItemPool& pool) {
  out << kPoolCsvHeader << '\n';
  for (const auto& item : pool)
    out << item.id << ',' << detail::format_double(item.a) << ',' << detail::format_double(item.b) << ','
        << detail::format_double(item.c) << ',' << item.category << '\n';
}

inline void write_pool_csv(const std::string& path, const ItemPool& pool) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write item pool '" + path + "'");
  write_pool_csv(out, pool);
}

// ---------------------------------------------------------------------------
// Synthetic pool

/// Marginal families for generated items: truncated log-normal discrimination,
/// truncated normal difficulty and a scaled beta guessing parameter. Defaults
/// reproduce the range and median of a 1136-item operational pool.
struct SyntheticPoolSpec {
  double a_median = 0.862;
  double a_log_sd = 0.4;
  double a_min = 0.289;
  double a_max = 2.372;

  double b_mean = -0.943;
  double b_sd = 2.0;
  double b_min = -5.531;
  double b_max = 5.426;

  double c_shape1 = 4.0;
  double c_shape2 = 6.25;
  double c_min = 0.048;
  double c_max = 0.529;

  int categories = 0;  // 0: every item in category 0
};

inline ItemPool synth_pool(std::size_t size, std::uint64_t seed, const SyntheticPoolSpec& spec = {}) {
  if (size < 1) throw std::invalid_argument("synthetic pool size must be at least 1");
  if (spec.categories < 0) throw std::invalid_argument("category count must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> a_dist(std::log(spec.a_median), spec.a_log_sd);
  std::normal_distribution<double> b_dist(spec.b_mean, spec.b_sd);
  std::gamma_distribution<double> g1(spec.c_shape1, 1.0);
  std::gamma_distribution<double> g2(spec.c_shape2, 1.0);

  auto truncated = [&](auto&& draw, double lo, double hi) {
    for (;;) {
      const double x = draw();
      if (x >= lo && x <= hi) return x;
    }
  };

  std::vector<Item> items(size);
  for (std::size_t i = 0; i < size; ++i) {
    Item& item = items[i];
    item.id = static_cast<ItemId>(i + 1);
    item.a = truncated([&] { return std::exp(a_dist(rng)); }, spec.a_min, spec.a_max);
    item.b = truncated([&] { return b_dist(rng); }, spec.b_min, spec.b_max);
    const double x = g1(rng);
    const double y = g2(rng);
    item.c = spec.c_min + (spec.c_max - spec.c_min) * x / (x + y);
    if (spec.categories > 0)
      item.category = std::uniform_int_distribution<int>(0, spec.categories - 1)(rng);
  }
  return ItemPool(std::move(items));
}

// ---------------------------------------------------------------------------
// Descriptive summary

struct ParameterSummary {
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
};

struct PoolSummary {
  std::size_t size = 0;
  ParameterSummary a, b, c;
  std::vector<std::size_t> category_sizes;
};

inline double median(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("median of empty sample");
  const auto mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) return upper;
  return 0.5 * (upper + *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)));
}

inline PoolSummary summarize(const ItemPool& pool) {
  auto describe = [&](auto field) {
    std::vector<double> v;
    v.reserve(pool.size());
    for (const auto& item : pool) v.push_back(field(item));
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return ParameterSummary{*lo, median(v), *hi};
  };
  PoolSummary s;
  s.size = pool.size();
  s.a = describe([](const Item& i) { return i.a; });
  s.b = describe([](const Item& i) { return i.b; });
  s.c = describe([](const Item& i) { return i.c; });
  s.category_sizes.assign(static_cast<std::size_t>(pool.category_count()), 0);
  for (const auto& item : pool) ++s.category_sizes[static_cast<std::size_t>(item.category)];
  return s;
}

inline void print_summary(std::ostream& out, const PoolSummary& s) {
  out << "items " << s.size << '\n';
  auto row = [&](const char* name, const ParameterSummary& p) {
    out << name << " min " << p.min << " median " << p.median << " max " << p.max << '\n';
  };
  row("a", s.a);
  row("b", s.b);
  row("c", s.c);
  for (std::size_t k = 0; k < s.category_sizes.size(); ++k)
    out << "category " << k << " items " << s.category_sizes[k] << '\n';
}

}  // namespace cmt

#endif  // CMT_ITEM_POOL_IO_HPP
