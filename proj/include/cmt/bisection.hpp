#ifndef CMT_BISECTION_HPP
#define CMT_BISECTION_HPP

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmt {

struct ProbePoint {
  double x = 0.0;
  double value = 0.0;
};

struct BisectOptions {
  double value_tolerance = 0.0;  // stop once |f(x) - target| <= this
  double x_tolerance = 1e-9;     // or once the bracket is narrower than this
  int max_expansions = 0;        // bracket doublings allowed before giving up
  int max_iterations = 200;
};

struct BisectResult {
  double root = 0.0;
  double value = 0.0;
  std::vector<ProbePoint> trace;
};

class BracketError : public std::runtime_error {
 public:
  BracketError(const std::string& what, std::vector<ProbePoint> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<ProbePoint>& trace() const { return trace_; }

 private:
  std::vector<ProbePoint> trace_;
};

/// Finds x in [lo, hi] with f(x) = target for a monotone (either direction)
/// probe f. The bracket is widened symmetrically up to `max_expansions` times
/// when f(lo) and f(hi) do not straddle the target.
inline BisectResult bracket_bisect(const std::function<double(double)>& f, double target, double lo, double hi,
                                   const BisectOptions& options = {}) {
  if (!(lo < hi)) throw std::invalid_argument("bracket_bisect: need lo < hi");
  BisectResult result;
  auto probe = [&](double x) {
    const double v = f(x);
    result.trace.push_back({x, v});
    return v;
  };
  auto done = [&](double x, double v) {
    result.root = x;
    result.value = v;
    return result;
  };

  double f_lo = probe(lo);
  double f_hi = probe(hi);
  for (int expansion = 0;; ++expansion) {
    if (std::abs(f_lo - target) <= options.value_tolerance) return done(lo, f_lo);
    if (std::abs(f_hi - target) <= options.value_tolerance) return done(hi, f_hi);
    if ((f_lo - target) * (f_hi - target) < 0.0) break;
    if (expansion >= options.max_expansions) {
      std::ostringstream msg;
      msg << "bracket_bisect: target " << target << " not bracketed; f(" << lo << ") = " << f_lo << ", f(" << hi
          << ") = " << f_hi;
      throw BracketError(msg.str(), result.trace);
    }
    const double width = hi - lo;
    lo -= width;
    hi += width;
    f_lo = probe(lo);
    f_hi = probe(hi);
  }

  const bool lo_below = f_lo < target;
  double mid = 0.5 * (lo + hi);
  double f_mid = f_lo;
  for (int it = 0; it < options.max_iterations; ++it) {
    mid = 0.5 * (lo + hi);
    f_mid = probe(mid);
    if (std::abs(f_mid - target) <= options.value_tolerance) return done(mid, f_mid);
    if ((f_mid < target) == lo_below) {
      lo = mid;
      f_lo = f_mid;
    } else {
      hi = mid;
      f_hi = f_mid;
    }
    if (hi - lo < options.x_tolerance) break;
  }
  // closest of the final bracket ends and midpoint
  if (std::abs(f_lo - target) < std::abs(f_mid - target)) {
    mid = lo;
    f_mid = f_lo;
  }
  if (std::abs(f_hi - target) < std::abs(f_mid - target)) {
    mid = hi;
    f_mid = f_hi;
  }
  return done(mid, f_mid);
}

}  // namespace cmt

#endif  // CMT_BISECTION_HPP
