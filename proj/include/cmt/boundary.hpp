// Boundary-crossing probabilities for the standard Gaussian random walk
// S_k = Y_1 + ... + Y_k that approximates the signed-root GLR statistic, and
// the closed-form Siegmund approximations to the same probabilities.
//
// Thresholds are on the log-likelihood-ratio scale: a threshold t becomes the
// normalised boundary |S_k| / sqrt(k) = sqrt(2t). Early boundaries are active
// for m0 <= k < N.

#ifndef CMT_BOUNDARY_HPP
#define CMT_BOUNDARY_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <variant>
#include <vector>

#include "cmt/bisection.hpp"
#include "cmt/parallel.hpp"
#include "cmt/random.hpp"

namespace cmt {

inline double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }
inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

enum class BoundaryKind {
  EarlyUpper,            // P{S_k/sqrt(k) >= sqrt(2B) for some m0 <= k < N}
  EarlyLower,            // P{S_k/sqrt(k) <= -sqrt(2A) for some m0 <= k < N}
  TerminalGivenNoEarly,  // P{no early lower crossing, S_N/sqrt(N) <= -sqrt(2C)}
};

struct MonteCarloMethod {
  std::size_t replications = 1'000'000;
  std::uint64_t seed = 1;
  unsigned workers = 0;
};

struct RecursiveIntegrationMethod {
  std::size_t grid_points = 512;
  double half_width_sd = 8.0;  // grid spans +/- half_width_sd * sqrt(N)
};

using BoundaryMethod = std::variant<MonteCarloMethod, RecursiveIntegrationMethod>;

struct BoundaryProbability {
  double value = 0.0;
  double standard_error = 0.0;  // zero for the numerical method
};

namespace detail {

inline double boundary_level(double threshold) {
  if (!(threshold >= 0.0)) throw std::invalid_argument("boundary threshold must be non-negative");
  return std::sqrt(2.0 * threshold);
}

inline constexpr std::size_t kWalksPerBlock = 4096;

inline BoundaryProbability boundary_monte_carlo(BoundaryKind kind, double level, double terminal_level, int n,
                                                int m0, const MonteCarloMethod& mc) {
  if (mc.replications < 1) throw std::invalid_argument("Monte Carlo boundary probability needs replications >= 1");
  const std::size_t blocks = (mc.replications + kWalksPerBlock - 1) / kWalksPerBlock;
  std::vector<std::size_t> hits(blocks, 0);
  std::vector<double> root_k(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) root_k[static_cast<std::size_t>(k)] = std::sqrt(static_cast<double>(k));
  const bool upper = kind == BoundaryKind::EarlyUpper;

  parallel_for(blocks, mc.workers, [&](std::size_t block) {
    UniformStream rng(derive_seed(mc.seed, block, static_cast<std::uint64_t>(StreamTag::Walk)));
    const std::size_t first = block * kWalksPerBlock;
    const std::size_t last = std::min(mc.replications, first + kWalksPerBlock);
    std::size_t count = 0;
    for (std::size_t w = first; w < last; ++w) {
      double s = 0.0;
      bool early = false;
      for (int k = 1; k < n; ++k) {
        s += rng.normal();
        if (k < m0) continue;
        const double z = s / root_k[static_cast<std::size_t>(k)];
        if (upper ? z >= level : z <= -level) {
          early = true;
          break;
        }
      }
      if (kind == BoundaryKind::TerminalGivenNoEarly) {
        if (early) continue;
        s += rng.normal();
        if (s / root_k[static_cast<std::size_t>(n)] <= -terminal_level) ++count;
      } else if (early) {
        ++count;
      }
    }
    hits[block] = count;
  });

  std::size_t total = 0;
  for (auto h : hits) total += h;
  const double r = static_cast<double>(mc.replications);
  const double p = static_cast<double>(total) / r;
  return {p, std::sqrt(p * (1.0 - p) / r)};
}

/// Simpson weights for `points` (odd) equally spaced nodes on [lo, hi].
inline void simpson_grid(double lo, double hi, std::size_t points, std::vector<double>& nodes,
                         std::vector<double>& weights) {
  nodes.resize(points);
  weights.resize(points);
  const double h = (hi - lo) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    nodes[i] = lo + h * static_cast<double>(i);
    weights[i] = (i == 0 || i + 1 == points) ? h / 3.0 : (i % 2 == 1 ? 4.0 * h / 3.0 : 2.0 * h / 3.0);
  }
}

/// Propagates the sub-density of the walk that has not crossed an upper
/// boundary level*sqrt(k) (active for m0 <= k < N). Returns the early
/// crossing probability, or with `terminal` set
/// P{no early crossing, S_N/sqrt(N) >= terminal_level}.
inline double boundary_recursive(double level, double terminal_level, bool terminal, int n, int m0,
                                 const RecursiveIntegrationMethod& ri) {
  if (ri.grid_points < 3) throw std::invalid_argument("recursive integration needs at least 3 grid points");
  if (!(ri.half_width_sd > 0.0)) throw std::invalid_argument("recursive integration needs a positive grid span");
  const std::size_t points = ri.grid_points % 2 == 1 ? ri.grid_points : ri.grid_points + 1;
  const double span = ri.half_width_sd * std::sqrt(static_cast<double>(n));

  auto boundary_at = [&](int k) {
    const bool active = k >= m0 && k < n;
    return active ? level * std::sqrt(static_cast<double>(k)) : std::numeric_limits<double>::infinity();
  };
  auto upper_tail = [](double x) { return normal_cdf(-x); };

  std::vector<double> x, w, y, v, density, next;
  double crossed = 0.0;

  // stage 1: density phi restricted to the continuation region
  {
    const double b = boundary_at(1);
    if (b < std::numeric_limits<double>::infinity()) crossed += upper_tail(b);
    simpson_grid(-span, std::min(b, span), points, x, w);
    density.resize(points);
    for (std::size_t i = 0; i < points; ++i) density[i] = normal_pdf(x[i]);
  }
  const int last_stage = n - 1;
  for (int k = 2; k <= last_stage; ++k) {
    const double b = boundary_at(k);
    if (b < std::numeric_limits<double>::infinity()) {
      double exit = 0.0;
      for (std::size_t i = 0; i < points; ++i) exit += w[i] * density[i] * upper_tail(b - x[i]);
      crossed += exit;
    }
    const double hi = std::min(b, span);
    if (hi <= -span) {
      density.assign(points, 0.0);
      continue;
    }
    simpson_grid(-span, hi, points, y, v);
    next.assign(points, 0.0);
    for (std::size_t j = 0; j < points; ++j) {
      double acc = 0.0;
      for (std::size_t i = 0; i < points; ++i) acc += w[i] * density[i] * normal_pdf(y[j] - x[i]);
      next[j] = acc;
    }
    std::swap(x, y);
    std::swap(w, v);
    std::swap(density, next);
  }
  if (!terminal) return n >= 2 ? crossed : 0.0;

  const double c = terminal_level * std::sqrt(static_cast<double>(n));
  if (n == 1) return upper_tail(c);
  double tail = 0.0;
  for (std::size_t i = 0; i < points; ++i) tail += w[i] * density[i] * upper_tail(c - x[i]);
  return tail;
}

}  // namespace detail

/// `threshold` is B for EarlyUpper and A for EarlyLower/TerminalGivenNoEarly;
/// `terminal_threshold` is C and only used by TerminalGivenNoEarly.
inline BoundaryProbability gaussian_boundary_prob(BoundaryKind kind, double threshold, double terminal_threshold,
                                                  int n, int m0, const BoundaryMethod& method) {
  if (n < 1 || m0 < 1 || m0 > n) throw std::invalid_argument("gaussian_boundary_prob: need 1 <= m0 <= N");
  const double level = detail::boundary_level(threshold);
  const double terminal_level =
      kind == BoundaryKind::TerminalGivenNoEarly ? detail::boundary_level(terminal_threshold) : 0.0;
  if (const auto* mc = std::get_if<MonteCarloMethod>(&method))
    return detail::boundary_monte_carlo(kind, level, terminal_level, n, m0, *mc);
  // the lower-boundary kinds are mirrored onto an upper boundary
  const auto& ri = std::get<RecursiveIntegrationMethod>(method);
  const bool terminal = kind == BoundaryKind::TerminalGivenNoEarly;
  return {detail::boundary_recursive(level, terminal_level, terminal, n, m0, ri), 0.0};
}

inline BoundaryProbability gaussian_boundary_prob(BoundaryKind kind, double threshold, int n, int m0,
                                                  const BoundaryMethod& method) {
  return gaussian_boundary_prob(kind, threshold, 0.0, n, m0, method);
}

// ---------------------------------------------------------------------------
// Siegmund approximations

/// Approximate probability that the early GLR boundary with threshold A is
/// crossed for some m0 <= k < N.
inline double siegmund_early(double A, int n, int m0) {
  if (!(A > 0.0) || n < 1 || m0 < 1 || m0 > n) throw std::invalid_argument("siegmund_early: invalid arguments");
  const double r = std::sqrt(2.0 * A);
  const double phi = normal_pdf(r);
  return 0.5 * ((r - 1.0 / r) * phi * std::log(static_cast<double>(n) / m0) + 4.0 * phi / r);
}

/// Approximate probability of a terminal rejection at N with threshold C
/// after no early crossing of the threshold-A boundary.
inline double siegmund_terminal(double A, double C, int n, int m0) {
  if (!(A > 0.0) || !(C > 0.0) || n < 1 || m0 < 1 || m0 > n)
    throw std::invalid_argument("siegmund_terminal: invalid arguments");
  const double r = std::sqrt(2.0 * A);
  return normal_cdf(-std::sqrt(2.0 * C)) +
         normal_pdf(r) / r * (std::log(std::sqrt(static_cast<double>(n) / m0)) - 2.0 + A * std::log(C / A));
}

struct ThresholdTriple {
  double A = 0.0;
  double B = 0.0;
  double C = 0.0;
};

/// Solves the Siegmund approximations for (A, B, C) with error budget split
/// eps*alpha / (1-eps)*alpha on type I and eps*beta on early acceptance.
inline ThresholdTriple solve_thresholds_siegmund(double alpha, double beta, double epsilon, int n, int m0) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0) || !(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("solve_thresholds_siegmund: targets must lie in (0, 1)");
  constexpr double lo = 0.5;
  constexpr double hi = 20.0;
  BisectOptions opts;
  opts.x_tolerance = 1e-10;
  ThresholdTriple t;
  t.A = bracket_bisect([&](double a) { return siegmund_early(a, n, m0); }, epsilon * alpha, lo, hi, opts).root;
  t.B = bracket_bisect([&](double b) { return siegmund_early(b, n, m0); }, epsilon * beta, lo, hi, opts).root;
  t.C = bracket_bisect([&](double c) { return siegmund_terminal(t.A, c, n, m0); }, (1.0 - epsilon) * alpha, lo, hi,
                       opts)
            .root;
  return t;
}

}  // namespace cmt

#endif  // CMT_BOUNDARY_HPP
