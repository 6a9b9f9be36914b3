// Adaptive item selection, exposure-control pool pruning and content
// spiraling.

#ifndef CMT_ITEM_SELECTION_HPP
#define CMT_ITEM_SELECTION_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include "cmt/irt_model.hpp"
#include "cmt/random.hpp"

namespace cmt {

enum class SelectionKind { MaxFisherAtCut, MaxFisherAtMle, MaxKlAtEstimate };

struct SelectionRule {
  SelectionKind kind = SelectionKind::MaxFisherAtMle;
  // KL rule compares theta_hat + d against theta_hat - d.
  double kl_halfwidth = 0.25;
};

class PoolExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Ability at which the rule's information index is evaluated: the cut point
/// for MaxFisherAtCut, otherwise the MLE when it exists and the cut point
/// when it does not.
inline double selection_point(const SelectionRule& rule, const std::optional<MleResult>& estimate, double theta_cut) {
  if (rule.kind == SelectionKind::MaxFisherAtCut) return theta_cut;
  if (estimate && estimate->exists()) return estimate->theta_hat;
  return theta_cut;
}

inline double selection_index(const SelectionRule& rule, const Item& item, double point) {
  if (rule.kind == SelectionKind::MaxKlAtEstimate)
    return kl_info(item, point + rule.kl_halfwidth, point - rule.kl_halfwidth);
  return fisher_info(item, point);
}

/// Index (into `pool`) of the unused item with the largest information at
/// `point`, restricted to `category` when it is non-negative. Ties go to the
/// smallest item id. Returns nullopt when no candidate remains.
inline std::optional<std::size_t> best_unused(const ItemPool& pool, std::span<const char> used,
                                              const SelectionRule& rule, double point, int category = -1) {
  std::optional<std::size_t> best;
  double best_info = -std::numeric_limits<double>::infinity();
  if (rule.kind != SelectionKind::MaxKlAtEstimate) {
    // scan by decreasing peak information and stop once no later item can win
    for (std::size_t i : pool.by_peak_information()) {
      const Item& item = pool[i];
      if (best && peak_fisher_info(item) * (1.0 + 1e-9) < best_info) break;
      if (used[i] || (category >= 0 && item.category != category)) continue;
      const double info = fisher_info(item, point);
      if (!best || info > best_info || (info == best_info && item.id < pool[*best].id)) {
        best = i;
        best_info = info;
      }
    }
    return best;
  }
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (used[i]) continue;
    const Item& item = pool[i];
    if (category >= 0 && item.category != category) continue;
    const double info = selection_index(rule, item, point);
    if (!best || info > best_info || (info == best_info && item.id < pool[*best].id)) {
      best = i;
      best_info = info;
    }
  }
  return best;
}

inline ItemId select_next(const ItemPool& pool, const std::unordered_set<ItemId>& used_ids, const SelectionRule& rule,
                          const std::optional<MleResult>& estimate, double theta_cut) {
  std::vector<char> used(pool.size(), 0);
  for (ItemId id : used_ids)
    if (pool.contains(id)) used[pool.index_of(id)] = 1;
  const auto best = best_unused(pool, used, rule, selection_point(rule, estimate, theta_cut));
  if (!best) throw PoolExhausted("item pool exhausted: every item has been used");
  return pool[*best].id;
}

// ---------------------------------------------------------------------------
// Exposure control and content balancing

struct ContentConstraints {
  std::vector<double> proportions;  // q_1..q_s
  double exposure_cap = 1.0;        // pi

  std::size_t category_count() const { return proportions.size(); }

  void validate() const {
    if (proportions.empty()) throw std::invalid_argument("content constraints: no categories");
    double total = 0.0;
    for (double q : proportions) {
      if (!(q > 0.0)) throw std::invalid_argument("content constraints: proportions must be positive");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("content constraints: proportions must sum to 1");
    if (!(exposure_cap > 0.0 && exposure_cap <= 1.0))
      throw std::invalid_argument("content constraints: exposure cap must lie in (0, 1]");
  }
};

/// Apportions `total` across `weights` by the largest-remainder rule; ties on
/// the remainder go to the lower index.
inline std::vector<int> largest_remainder(int total, std::span<const double> weights) {
  std::vector<int> counts(weights.size());
  std::vector<double> remainder(weights.size());
  int assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double quota = total * weights[i];
    counts[i] = static_cast<int>(std::floor(quota + 1e-9));
    remainder[i] = quota - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto l, auto r) { return remainder[l] > remainder[r]; });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++counts[order[k % order.size()]];
  return counts;
}

struct PruningPlan {
  std::vector<int> candidates;  // top-information set size per category
  std::vector<int> selected;    // items drawn from each candidate set
};

/// Candidate sets hold ceil(N q_i / pi) items (never fewer than selected_i / pi,
/// so the inclusion probability cannot exceed pi after rounding).
inline PruningPlan pruning_plan(int max_len, const ContentConstraints& constraints) {
  constraints.validate();
  PruningPlan plan;
  plan.selected = largest_remainder(max_len, constraints.proportions);
  for (std::size_t i = 0; i < constraints.category_count(); ++i) {
    const double pi = constraints.exposure_cap;
    const int by_quota = static_cast<int>(std::ceil(max_len * constraints.proportions[i] / pi - 1e-9));
    const int by_count = static_cast<int>(std::ceil(plan.selected[i] / pi - 1e-9));
    plan.candidates.push_back(std::max(by_quota, by_count));
  }
  return plan;
}

/// Builds an operative pool of exactly `max_len` items: per category, the
/// items most informative at the cut point form a candidate set from which a
/// seeded uniform sample is drawn.
inline ItemPool prune_pool_exposure(const ItemPool& pool, int max_len, const ContentConstraints& constraints,
                                    double theta_cut, std::uint64_t seed) {
  const PruningPlan plan = pruning_plan(max_len, constraints);
  UniformStream rng(seed);
  std::vector<Item> chosen;
  chosen.reserve(static_cast<std::size_t>(max_len));
  for (std::size_t cat = 0; cat < constraints.category_count(); ++cat) {
    std::vector<std::pair<double, const Item*>> ranked;
    for (const auto& item : pool)
      if (item.category == static_cast<int>(cat)) ranked.emplace_back(fisher_info(item, theta_cut), &item);
    const auto need = static_cast<std::size_t>(plan.candidates[cat]);
    if (ranked.size() < need)
      throw std::invalid_argument("category " + std::to_string(cat) + " has " + std::to_string(ranked.size()) +
                                  " items but exposure control needs " + std::to_string(need));
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(need), ranked.end(),
                      [](const auto& l, const auto& r) {
                        return l.first != r.first ? l.first > r.first : l.second->id < r.second->id;
                      });
    std::vector<Item> members;
    members.reserve(need);
    for (std::size_t i = 0; i < need; ++i) members.push_back(*ranked[i].second);
    // partial Fisher-Yates: the first `take` slots become a uniform sample
    const auto take = static_cast<std::size_t>(plan.selected[cat]);
    for (std::size_t i = 0; i < take; ++i) {
      const auto span = members.size() - i;
      auto j = i + static_cast<std::size_t>(rng.next() * static_cast<double>(span));
      if (j >= members.size()) j = members.size() - 1;
      std::swap(members[i], members[j]);
    }
    chosen.insert(chosen.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(take));
  }
  std::sort(chosen.begin(), chosen.end(), [](const Item& l, const Item& r) { return l.id < r.id; });
  return ItemPool(std::move(chosen));
}

/// Category whose share of the first k items falls furthest below its target,
/// considering only categories with `available` set (all when empty). Ties go
/// to the smallest index.
inline std::size_t spiral_category(std::span<const int> counts, std::span<const double> q,
                                   std::span<const char> available = {}) {
  if (counts.size() != q.size()) throw std::invalid_argument("spiral_category: size mismatch");
  const int k = std::accumulate(counts.begin(), counts.end(), 0);
  std::optional<std::size_t> best;
  double best_deficit = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!available.empty() && !available[i]) continue;
    const double share = k == 0 ? 0.0 : static_cast<double>(counts[i]) / k;
    const double deficit = q[i] - share;
    if (!best || deficit > best_deficit + 1e-12) {
      best = i;
      best_deficit = deficit;
    }
  }
  if (!best) throw PoolExhausted("spiral_category: no category has items left");
  return *best;
}

}  // namespace cmt

#endif  // CMT_ITEM_SELECTION_HPP
