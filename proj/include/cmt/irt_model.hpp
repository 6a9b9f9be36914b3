// Three-parameter logistic item response model: response probabilities,
// information measures, likelihoods and the clamped ability MLE.

#ifndef CMT_IRT_MODEL_HPP
#define CMT_IRT_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace cmt {

using ItemId = std::int64_t;

struct Item {
  ItemId id = 0;
  double a = 1.0;  // discrimination
  double b = 0.0;  // difficulty
  double c = 0.0;  // guessing floor
  int category = 0;
};

inline void validate_item(const Item& item) {
  if (!(item.a > 0.0) || !std::isfinite(item.a))
    throw std::invalid_argument("item " + std::to_string(item.id) + ": discrimination must be positive");
  if (!std::isfinite(item.b))
    throw std::invalid_argument("item " + std::to_string(item.id) + ": difficulty must be finite");
  if (!(item.c >= 0.0 && item.c < 1.0))
    throw std::invalid_argument("item " + std::to_string(item.id) + ": guessing must lie in [0, 1)");
  if (item.category < 0)
    throw std::invalid_argument("item " + std::to_string(item.id) + ": category must be non-negative");
}

/// Largest Fisher information the item attains at any ability.
inline double peak_fisher_info(const Item& item) {
  const double c = item.c;
  return item.a * item.a / (8.0 * (1.0 - c) * (1.0 - c)) * (1.0 - 20.0 * c - 8.0 * c * c + std::pow(1.0 + 8.0 * c, 1.5));
}

/// Non-empty ordered collection of items with unique ids.
class ItemPool {
 public:
  ItemPool() = default;

  explicit ItemPool(std::vector<Item> items) : items_(std::move(items)) {
    if (items_.empty()) throw std::invalid_argument("item pool is empty");
    index_.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) {
      validate_item(items_[i]);
      if (!index_.emplace(items_[i].id, i).second)
        throw std::invalid_argument("duplicate item id " + std::to_string(items_[i].id));
    }
    peak_order_.resize(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) peak_order_[i] = i;
    std::sort(peak_order_.begin(), peak_order_.end(), [&](std::size_t l, std::size_t r) {
      const double pl = peak_fisher_info(items_[l]), pr = peak_fisher_info(items_[r]);
      return pl != pr ? pl > pr : items_[l].id < items_[r].id;
    });
  }

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Item& operator[](std::size_t i) const { return items_[i]; }
  std::span<const Item> items() const { return items_; }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  bool contains(ItemId id) const { return index_.count(id) != 0; }

  std::size_t index_of(ItemId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::out_of_range("unknown item id " + std::to_string(id));
    return it->second;
  }

  const Item& at(ItemId id) const { return items_[index_of(id)]; }

  /// Item indices by decreasing peak Fisher information.
  std::span<const std::size_t> by_peak_information() const { return peak_order_; }

  /// Largest category label plus one.
  int category_count() const {
    int s = 0;
    for (const auto& item : items_) s = std::max(s, item.category + 1);
    return s;
  }

 private:
  std::vector<Item> items_;
  std::unordered_map<ItemId, std::size_t> index_;
  std::vector<std::size_t> peak_order_;
};

struct ResponseRecord {
  ItemId item_id = 0;
  bool correct = false;
};

/// A response paired with the parameters of the item that produced it.
struct ScoredResponse {
  Item item;
  bool correct = false;
};

namespace detail {

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace detail

inline double prob_correct(const Item& item, double theta) {
  return item.c + (1.0 - item.c) * detail::sigmoid(item.a * (theta - item.b));
}

/// log p(theta), evaluated without forming 1 - sigmoid.
inline double log_prob_correct(const Item& item, double theta) {
  const double z = item.a * (theta - item.b);
  if (item.c == 0.0) return -detail::softplus(-z);
  return std::log(item.c + (1.0 - item.c) * detail::sigmoid(z));
}

/// log(1 - p(theta)) = log(1 - c) - log(1 + e^z).
inline double log_prob_incorrect(const Item& item, double theta) {
  return std::log1p(-item.c) - detail::softplus(item.a * (theta - item.b));
}

inline double log_response_prob(const Item& item, bool correct, double theta) {
  return correct ? log_prob_correct(item, theta) : log_prob_incorrect(item, theta);
}

inline double fisher_info(const Item& item, double theta) {
  const double z = item.a * (theta - item.b);
  const double s = detail::sigmoid(z);
  const double scale = item.a * item.a * (1.0 - item.c) * s * s;
  // a^2 (1-c) s^2 / (c + e^z), rewritten for z > 0 so e^z cannot overflow
  if (z > 0.0) {
    const double e = std::exp(-z);
    return scale * e / (item.c * e + 1.0);
  }
  return scale / (item.c + std::exp(z));
}

namespace detail {

/// log1p(x) - x, with a short series near zero where the difference cancels.
inline double log1p_minus_x(double x) {
  if (std::abs(x) < 1e-3) {
    const double x2 = x * x;
    return x2 * (-0.5 + x * (1.0 / 3 + x * (-0.25 + x * (0.2 + x * (-1.0 / 6)))));
  }
  return std::log1p(x) - x;
}

}  // namespace detail

/// Kullback-Leibler divergence of the response distribution at theta_prime from theta.
/// Written in terms of d = p - q so that nearby abilities keep full relative precision.
inline double kl_info(const Item& item, double theta, double theta_prime) {
  if (theta == theta_prime) return 0.0;
  const double z = item.a * (theta - item.b);
  const double z_prime = item.a * (theta_prime - item.b);
  const double p = prob_correct(item, theta);
  const double q = prob_correct(item, theta_prime);
  const double q_bar = (1.0 - item.c) * detail::sigmoid(-z_prime);
  double kl = 0.0;
  if (q > 0.0 && q_bar > 0.0) {
    const double p_bar = (1.0 - item.c) * detail::sigmoid(-z);
    const double d = -(1.0 - item.c) * detail::sigmoid(z) * detail::sigmoid(-z_prime) * std::expm1(z_prime - z);
    kl = d * d / (q * q_bar) + p * detail::log1p_minus_x(d / q) + p_bar * detail::log1p_minus_x(-d / q_bar);
  } else {
    kl = p * (log_prob_correct(item, theta) - log_prob_correct(item, theta_prime)) +
         (1.0 - p) * (log_prob_incorrect(item, theta) - log_prob_incorrect(item, theta_prime));
  }
  return kl > 0.0 ? kl : 0.0;
}

/// Natural parameter tau = log(p / (1 - p)) of the item's Bernoulli family.
inline double natural_param(const Item& item, double theta) {
  return log_prob_correct(item, theta) - log_prob_incorrect(item, theta);
}

/// Cumulant function psi(tau) = log(1 + e^tau).
inline double psi(double tau) { return detail::softplus(tau); }

// ---------------------------------------------------------------------------
// Likelihoods

inline double log_likelihood(std::span<const ScoredResponse> responses, double theta) {
  double sum = 0.0;
  for (const auto& r : responses) sum += log_response_prob(r.item, r.correct, theta);
  return sum;
}

inline std::vector<ScoredResponse> score(const ItemPool& pool, std::span<const ResponseRecord> responses) {
  std::vector<ScoredResponse> scored;
  scored.reserve(responses.size());
  for (const auto& r : responses) scored.push_back({pool.at(r.item_id), r.correct});
  return scored;
}

inline double log_likelihood(const ItemPool& pool, std::span<const ResponseRecord> responses, double theta) {
  return log_likelihood(score(pool, responses), theta);
}

/// log[L(theta_low) / L(theta_high)].
inline double llr(std::span<const ScoredResponse> responses, double theta_low, double theta_high) {
  return log_likelihood(responses, theta_low) - log_likelihood(responses, theta_high);
}

inline double llr(const ItemPool& pool, std::span<const ResponseRecord> responses, double theta_low,
                  double theta_high) {
  return llr(score(pool, responses), theta_low, theta_high);
}

// ---------------------------------------------------------------------------
// Maximum likelihood

struct ClampInterval {
  double lo = -6.0;
  double hi = 6.0;

  void validate() const {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw std::invalid_argument("clamp interval must be finite with lo < hi");
  }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

enum class MleStatus { Exists, DivergesUp, DivergesDown };

struct MleResult {
  MleStatus status = MleStatus::DivergesDown;
  double theta_hat = 0.0;

  bool exists() const { return status == MleStatus::Exists; }
  friend bool operator==(const MleResult&, const MleResult&) = default;
};

inline constexpr double kMleGridSpacing = 0.05;
inline constexpr double kMleTolerance = 1e-6;

/// Running log-likelihood over a fixed ability grid. Adding responses one at a
/// time gives bit-identical sums to a from-scratch evaluation because terms
/// are accumulated in administration order.
class MleGrid {
 public:
  explicit MleGrid(ClampInterval clamp = {}) : clamp_(clamp) {
    clamp_.validate();
    const auto cells = static_cast<std::size_t>(std::ceil((clamp_.hi - clamp_.lo) / kMleGridSpacing - 1e-9));
    thetas_.resize(cells + 1);
    for (std::size_t i = 0; i <= cells; ++i)
      thetas_[i] = clamp_.lo + (clamp_.hi - clamp_.lo) * static_cast<double>(i) / static_cast<double>(cells);
    sums_.assign(thetas_.size(), 0.0);
  }

  const ClampInterval& clamp() const { return clamp_; }

  void add(const Item& item, bool correct) {
    for (std::size_t i = 0; i < thetas_.size(); ++i) sums_[i] += log_response_prob(item, correct, thetas_[i]);
    (correct ? n_correct_ : n_incorrect_) += 1;
  }

  std::size_t count() const { return n_correct_ + n_incorrect_; }

  /// `responses` must be exactly the responses added so far, in order.
  MleResult estimate(std::span<const ScoredResponse> responses) const {
    if (count() == 0) throw std::invalid_argument("mle requires at least one response");
    if (n_incorrect_ == 0) return {MleStatus::DivergesUp, clamp_.hi};
    if (n_correct_ == 0) return {MleStatus::DivergesDown, clamp_.lo};

    std::size_t best = 0;
    for (std::size_t i = 1; i < sums_.size(); ++i)
      if (sums_[i] > sums_[best]) best = i;

    const double lo = thetas_[best == 0 ? 0 : best - 1];
    const double hi = thetas_[best + 1 == thetas_.size() ? best : best + 1];
    double theta = refine(responses, lo, thetas_[best], hi);
    auto f = [&](double t) { return log_likelihood(responses, t); };
    double value = f(theta);
    // the maximiser can sit on a clamp bound when the likelihood is monotone there
    if (sums_[best] > value) theta = thetas_[best];
    return {MleStatus::Exists, std::clamp(theta, clamp_.lo, clamp_.hi)};
  }

 private:
  struct ScoreSlope {
    double score = 0.0;
    double information = 0.0;
  };

  static ScoreSlope score_at(std::span<const ScoredResponse> responses, double theta) {
    ScoreSlope s;
    for (const auto& r : responses) {
      const Item& item = r.item;
      const double sig = detail::sigmoid(item.a * (theta - item.b));
      const double p = item.c + (1.0 - item.c) * sig;
      const double q = (1.0 - item.c) * detail::sigmoid(-item.a * (theta - item.b));
      const double dp = item.a * (1.0 - item.c) * sig * (1.0 - sig);
      s.score += (r.correct ? 1.0 / p : -1.0 / q) * dp;
      s.information += dp * dp / (p * q);
    }
    return s;
  }

  /// Zero of the score near the best grid point `mid`, by Fisher-scoring steps
  /// kept inside a shrinking bracket; an endpoint when the score does not
  /// change sign there.
  static double refine(std::span<const ScoredResponse> responses, double lo, double mid, double hi) {
    const double s_mid = score_at(responses, mid).score;
    if (s_mid == 0.0) return mid;
    if (s_mid > 0.0)
      lo = mid;
    else
      hi = mid;
    if (score_at(responses, lo).score <= 0.0) return lo;
    if (score_at(responses, hi).score >= 0.0) return hi;
    double theta = 0.5 * (lo + hi);
    for (int it = 0; it < 100 && hi - lo > 0.1 * kMleTolerance; ++it) {
      const ScoreSlope s = score_at(responses, theta);
      if (s.score == 0.0) return theta;
      if (s.score > 0.0)
        lo = theta;
      else
        hi = theta;
      const double step = s.information > 0.0 ? s.score / s.information : 0.0;
      double next = theta + step;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      if (std::abs(next - theta) < 0.01 * kMleTolerance) return next;
      theta = next;
    }
    return theta;
  }

  ClampInterval clamp_;
  std::vector<double> thetas_;
  std::vector<double> sums_;
  std::size_t n_correct_ = 0;
  std::size_t n_incorrect_ = 0;
};

inline MleResult mle(std::span<const ScoredResponse> responses, ClampInterval clamp = {}) {
  if (responses.empty()) throw std::invalid_argument("mle requires at least one response");
  MleGrid grid(clamp);
  for (const auto& r : responses) grid.add(r.item, r.correct);
  return grid.estimate(responses);
}

inline MleResult mle(const ItemPool& pool, std::span<const ResponseRecord> responses, ClampInterval clamp = {}) {
  return mle(score(pool, responses), clamp);
}

/// log[L(theta_hat) / L(theta_ref)], floored at zero.
inline double glr_stat(std::span<const ScoredResponse> responses, double theta_hat, double theta_ref) {
  const double g = log_likelihood(responses, theta_hat) - log_likelihood(responses, theta_ref);
  return g > 0.0 ? g : 0.0;
}

inline double glr_stat(const ItemPool& pool, std::span<const ResponseRecord> responses, double theta_hat,
                       double theta_ref) {
  return glr_stat(score(pool, responses), theta_hat, theta_ref);
}

/// Signed-root statistic sign(theta_hat - theta_ref) * sqrt(2 k glr).
inline double signed_root(int k, double glr, double theta_hat, double theta_ref) {
  if (k < 1) throw std::invalid_argument("signed_root: k must be positive");
  if (glr < 0.0) throw std::invalid_argument("signed_root: glr must be non-negative");
  const double magnitude = std::sqrt(2.0 * static_cast<double>(k) * glr);
  if (theta_hat > theta_ref) return magnitude;
  if (theta_hat < theta_ref) return -magnitude;
  return 0.0;
}

}  // namespace cmt

#endif  // CMT_IRT_MODEL_HPP
