// Stopping rules and terminal decisions for mastery tests of
// H0: theta >= theta_plus (master) against H1: theta <= theta_minus.
//
// All log-likelihood ratios are log[L(alternative) / L(theta_plus)], so large
// values favour non-mastery. Boundary ties resolve toward stopping/rejection.

#ifndef CMT_STOPPING_RULES_HPP
#define CMT_STOPPING_RULES_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>

namespace cmt {

enum class Decision { Continue, AcceptH0, RejectH0 };

inline const char* to_string(Decision d) {
  switch (d) {
    case Decision::Continue: return "continue";
    case Decision::AcceptH0: return "master";
    case Decision::RejectH0: return "non-master";
  }
  return "?";
}

inline constexpr double kNotCalibrated = std::numeric_limits<double>::quiet_NaN();

struct Hypotheses {
  double theta_plus = -1.07;
  double theta_minus = -1.57;
  double theta_cut = -1.32;
  double theta_implied = kNotCalibrated;  // NaN until routine 1 has run
  double alpha = 0.05;
  double beta = 0.05;

  bool has_implied() const { return std::isfinite(theta_implied); }

  void validate() const {
    if (!std::isfinite(theta_plus) || !std::isfinite(theta_minus) || !std::isfinite(theta_cut))
      throw std::invalid_argument("hypotheses: abilities must be finite");
    if (!(theta_minus < theta_plus)) throw std::invalid_argument("hypotheses: theta_minus must be below theta_plus");
    if (has_implied() && !(theta_implied < theta_plus))
      throw std::invalid_argument("hypotheses: implied alternative must be below theta_plus");
    if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
      throw std::invalid_argument("hypotheses: alpha and beta must lie in (0, 1)");
  }
};

struct Thresholds {
  double A = std::numeric_limits<double>::infinity();
  double B = std::numeric_limits<double>::infinity();
  double C = 0.0;
  int max_len = 50;
  int min_stage = 1;

  void validate() const {
    if (max_len < 1) throw std::invalid_argument("thresholds: max_len must be positive");
    if (min_stage < 1 || min_stage > max_len)
      throw std::invalid_argument("thresholds: min_stage must lie in [1, max_len]");
    if (std::isnan(A) || std::isnan(B) || std::isnan(C)) throw std::invalid_argument("thresholds: NaN threshold");
  }
};

/// Smallest integer >= rho * N.
inline int min_stage_for(double rho, int max_len) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0, 1)");
  const int m0 = static_cast<int>(std::ceil(rho * max_len - 1e-9));
  return std::max(1, m0);
}

/// Wald's approximate SPRT boundaries (A, B) for error targets (alpha, beta).
inline std::pair<double, double> wald_thresholds(double alpha, double beta) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(beta > 0.0 && beta < 1.0))
    throw std::invalid_argument("wald_thresholds: alpha and beta must lie in (0, 1)");
  return {std::log((1.0 - alpha) / beta), std::log((1.0 - beta) / alpha)};
}

inline double tsprt_truncation_c(double A, double B) { return (A - B) / 2.0; }

inline Decision sprt_step(double llr_value, double A, double B) {
  if (llr_value >= A) return Decision::RejectH0;
  if (llr_value <= -B) return Decision::AcceptH0;
  return Decision::Continue;
}

inline Decision fixed_length_decision(double llr_at_n, double C) {
  return llr_at_n >= C ? Decision::RejectH0 : Decision::AcceptH0;
}

inline Decision tsprt_step(int k, int max_len, double llr_value, double A, double B, double C) {
  if (k < 1 || k > max_len) throw std::out_of_range("tsprt_step: stage outside [1, N]");
  if (k < max_len) return sprt_step(llr_value, A, B);
  return fixed_length_decision(llr_value, C);
}

/// Modified Haybittle-Peto rule. `glr_vs_plus` and `glr_vs_implied` are
/// log[L(theta_hat) / L(theta_plus)] and log[L(theta_hat) / L(theta_implied)].
inline Decision modhp_step(int k, const Thresholds& t, const Hypotheses& h, double theta_hat, double glr_vs_plus,
                           double glr_vs_implied) {
  if (k < 1 || k > t.max_len) throw std::out_of_range("modhp_step: stage outside [1, N]");
  if (k == t.max_len)
    return (theta_hat < h.theta_plus && glr_vs_plus >= t.C) ? Decision::RejectH0 : Decision::AcceptH0;
  if (k < t.min_stage) return Decision::Continue;
  const bool reject = theta_hat < h.theta_plus && glr_vs_plus >= t.A;
  const bool accept = theta_hat > h.theta_implied && glr_vs_implied >= t.B;
  // both boundaries at once: classify as master
  if (accept) return Decision::AcceptH0;
  if (reject) return Decision::RejectH0;
  return Decision::Continue;
}

}  // namespace cmt

#endif  // CMT_STOPPING_RULES_HPP
