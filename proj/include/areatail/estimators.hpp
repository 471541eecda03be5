#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "areatail/excursion.hpp"
#include "areatail/increment_model.hpp"
#include "areatail/numeric.hpp"

namespace areatail {

enum class Method { naive, is_mixture, dp_exact };

const char* method_name(Method m);

// Point estimate of a rare-event probability. Truncated paths are excluded
// from p_hat; their count is reported and folded into the upper CI edge as
// worst-case mass.
struct TailEstimate {
  double p_hat = 0.0;
  double stderr_ = 0.0;
  Interval ci95;
  std::uint64_t n = 0;
  Method method = Method::naive;
  std::uint64_t truncated_count = 0;
};

// Defensive mixture proposal: each increment is nominal with probability
// 1-w and Y | Y > b (shifted as usual) with probability w, so the
// likelihood ratio per step is bounded and depends only on {Y > b}.
struct ISConfig {
  double mixture_weight = 0.05;
  double tilt_threshold = 0.0;  // b
  void validate() const {
    if (!(mixture_weight > 0.0 && mixture_weight < 1.0))
      throw std::invalid_argument("IS mixture weight must lie in (0,1)");
    if (!(tilt_threshold > 0.0))
      throw std::invalid_argument("IS tilt threshold must be > 0");
  }
};

inline double default_tilt_threshold(double drift_a, double x) {
  return std::sqrt(2.0 * drift_a * x) / 4.0;
}

// Naive Monte Carlo estimates of P(A_tau > x), P(tau > t), P(M_tau > y) on a
// grid of thresholds, coupled on one common sample.
std::vector<TailEstimate> naive_mc_area_tail(const IncrementModel& model,
                                             const std::vector<double>& xs,
                                             std::uint64_t n,
                                             const SimConfig& config,
                                             unsigned threads = 1);
std::vector<TailEstimate> naive_mc_tau_tail(const IncrementModel& model,
                                            const std::vector<double>& ts,
                                            std::uint64_t n,
                                            const SimConfig& config,
                                            unsigned threads = 1);
std::vector<TailEstimate> naive_mc_max_tail(const IncrementModel& model,
                                            const std::vector<double>& ys,
                                            std::uint64_t n,
                                            const SimConfig& config,
                                            unsigned threads = 1);

// single-threshold conveniences
inline TailEstimate naive_mc_area_tail(const IncrementModel& model, double x,
                                       std::uint64_t n, const SimConfig& config,
                                       unsigned threads = 1) {
  return naive_mc_area_tail(model, std::vector<double>{x}, n, config,
                            threads)[0];
}
inline TailEstimate naive_mc_tau_tail(const IncrementModel& model, double t,
                                      std::uint64_t n, const SimConfig& config,
                                      unsigned threads = 1) {
  return naive_mc_tau_tail(model, std::vector<double>{t}, n, config,
                           threads)[0];
}
inline TailEstimate naive_mc_max_tail(const IncrementModel& model, double y,
                                      std::uint64_t n, const SimConfig& config,
                                      unsigned threads = 1) {
  return naive_mc_max_tail(model, std::vector<double>{y}, n, config,
                           threads)[0];
}

TailEstimate is_mixture_area_tail(const IncrementModel& model, double x,
                                  std::uint64_t n, const SimConfig& config,
                                  const ISConfig& is_config,
                                  unsigned threads = 1);

// Sample mean of tau plus the optional-stopping cross-check
// mean(S_tau)/(-a), over non-truncated outcomes.
struct MeanTauEstimate {
  double e_tau = 0.0;
  double stderr_ = 0.0;
  double wald_e_tau = 0.0;
  double wald_stderr = 0.0;
  std::uint64_t n = 0;
  std::uint64_t truncated_count = 0;
};

MeanTauEstimate estimate_e_tau(const IncrementModel& model, std::uint64_t n,
                               const SimConfig& config, unsigned threads = 1);

// P(A_tau > x, M_tau > y) with the validity-window bookkeeping of the joint
// tail statement: part (a) windows are [epsilon sqrt(x), sqrt(2ax)] for
// regularly varying tails, part (b) windows are
// [sqrt(2ax) - R sqrt(2ax)/g(sqrt(2ax)), sqrt(2ax)] for semi-exponential ones.
struct JointTailWindow {
  enum class Kind { regvar_a, semiexp_b };
  Kind kind = Kind::regvar_a;
  double epsilon = 0.5;  // part (a) lower edge factor
  double R = 1.0;        // part (b) width parameter
};

struct JointTailEstimate {
  TailEstimate estimate;
  bool in_window = false;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

JointTailEstimate joint_tail(const IncrementModel& model, double x, double y,
                             std::uint64_t n, const SimConfig& config,
                             const JointTailWindow& window,
                             unsigned threads = 1);

// Empirical conditional law of sigma_y given M_tau > y, with the reference
// q_k = P(tau > k-1)/E tau computed from the same run's tau histogram.
struct SigmaLawResult {
  double y = 0.0;
  std::uint64_t cond_count = 0;       // outcomes with M_tau > y
  std::vector<double> empirical;      // empirical[k-1] = P(sigma_y = k | M>y)
  std::vector<double> q;              // q[k-1] = q_k reference
  double e_tau = 0.0;
  double total_variation = 0.0;       // TV over k <= k_max plus the remainder
  std::uint64_t n = 0;
  std::uint64_t truncated_count = 0;
};

SigmaLawResult sigma_y_conditional_law(const IncrementModel& model, double y,
                                       int k_max, std::uint64_t n,
                                       const SimConfig& config,
                                       unsigned threads = 1);

// Empirical frequency of {A_n > x, all increments <= y} over fixed-horizon
// walks; the event bounded by the truncated-MGF inequality. One simulation
// pass serves the whole (x, y) grid.
std::vector<TailEstimate> fixed_horizon_joint_tail(
    const IncrementModel& model, std::uint64_t n_steps,
    const std::vector<std::pair<double, double>>& xy_grid,
    std::uint64_t n_runs, std::uint64_t seed, unsigned threads = 1);

}  // namespace areatail
