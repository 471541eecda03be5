#include "areatail/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace areatail {

namespace {

// Same fixed-block fold as fold_excursions, for estimators that need their
// own per-index sampling loop (the IS mixture).
template <class Acc, class PerIndex>
void fold_indexed(std::uint64_t n, unsigned threads, Acc& acc, PerIndex&& fn) {
  if (n == 0) return;
  const std::uint64_t n_blocks = (n + detail::kFoldBlock - 1) / detail::kFoldBlock;
  if (threads == 0) threads = 1;
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n_blocks));
  std::vector<Acc> partials(n_blocks, acc);
  std::atomic<std::uint64_t> next_block{0};
  auto work = [&]() {
    for (;;) {
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      const std::uint64_t lo = b * detail::kFoldBlock;
      const std::uint64_t hi = std::min(n, lo + detail::kFoldBlock);
      for (std::uint64_t i = lo; i < hi; ++i) fn(partials[b], i);
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const Acc& part : partials) acc.merge(part);
}

enum class Stat { area, tau, max };

struct GridCountAcc {
  Stat stat = Stat::area;
  std::vector<double> thresholds;
  std::vector<std::uint64_t> hits;
  std::uint64_t n_ok = 0;
  std::uint64_t truncated = 0;

  void add(const ExcursionOutcome& o) {
    if (o.truncated) {
      ++truncated;
      return;
    }
    ++n_ok;
    const double v = stat == Stat::area  ? o.area
                     : stat == Stat::tau ? static_cast<double>(o.tau)
                                         : o.max;
    for (std::size_t i = 0; i < thresholds.size(); ++i)
      if (v > thresholds[i]) ++hits[i];
  }
  void merge(const GridCountAcc& other) {
    n_ok += other.n_ok;
    truncated += other.truncated;
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += other.hits[i];
  }
};

TailEstimate binomial_estimate(std::uint64_t hits, std::uint64_t n_ok,
                               std::uint64_t truncated, Method method) {
  if (n_ok == 0)
    throw std::runtime_error("all paths truncated: configuration unusable");
  TailEstimate e;
  e.method = method;
  e.n = n_ok + truncated;
  e.truncated_count = truncated;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(n_ok);
  e.stderr_ = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(n_ok));
  e.ci95 = binomial_ci95(e.p_hat, e.stderr_, e.n, truncated);
  return e;
}

std::vector<TailEstimate> naive_grid(const IncrementModel& model,
                                     const std::vector<double>& thresholds,
                                     std::uint64_t n, const SimConfig& config,
                                     Stat stat, unsigned threads) {
  GridCountAcc acc;
  acc.stat = stat;
  acc.thresholds = thresholds;
  acc.hits.assign(thresholds.size(), 0);
  fold_excursions(model, config, n, threads, acc);
  std::vector<TailEstimate> out;
  out.reserve(thresholds.size());
  for (std::size_t i = 0; i < thresholds.size(); ++i)
    out.push_back(binomial_estimate(acc.hits[i], acc.n_ok, acc.truncated,
                                    Method::naive));
  return out;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::naive: return "naive";
    case Method::is_mixture: return "is_mixture";
    case Method::dp_exact: return "dp_exact";
  }
  return "unknown";
}

std::vector<TailEstimate> naive_mc_area_tail(const IncrementModel& model,
                                             const std::vector<double>& xs,
                                             std::uint64_t n,
                                             const SimConfig& config,
                                             unsigned threads) {
  return naive_grid(model, xs, n, config, Stat::area, threads);
}

std::vector<TailEstimate> naive_mc_tau_tail(const IncrementModel& model,
                                            const std::vector<double>& ts,
                                            std::uint64_t n,
                                            const SimConfig& config,
                                            unsigned threads) {
  return naive_grid(model, ts, n, config, Stat::tau, threads);
}

std::vector<TailEstimate> naive_mc_max_tail(const IncrementModel& model,
                                            const std::vector<double>& ys,
                                            std::uint64_t n,
                                            const SimConfig& config,
                                            unsigned threads) {
  return naive_grid(model, ys, n, config, Stat::max, threads);
}

namespace {

struct ISAcc {
  KahanSum sum_w;
  KahanSum sum_w2;
  std::uint64_t hits = 0;
  std::uint64_t truncated = 0;
  std::uint64_t overflowed = 0;
  void merge(const ISAcc& o) {
    sum_w.merge(o.sum_w);
    sum_w2.merge(o.sum_w2);
    hits += o.hits;
    truncated += o.truncated;
    overflowed += o.overflowed;
  }
};

}  // namespace

TailEstimate is_mixture_area_tail(const IncrementModel& model, double x,
                                  std::uint64_t n, const SimConfig& config,
                                  const ISConfig& is_config, unsigned threads) {
  config.validate();
  is_config.validate();
  if (model.lattice)
    throw std::invalid_argument(
        "is_mixture_area_tail: the two-point lattice law has no tail to tilt");
  const double w = is_config.mixture_weight;
  const double b = is_config.tilt_threshold;  // threshold on Y
  const double tail_b = model.y_tail(b);
  if (!(tail_b > 0.0))
    throw std::invalid_argument("IS tilt threshold has zero tail mass");
  // The tilted component is the conditional law of the same Y given Y > b,
  // so the per-step likelihood ratio (nominal / mixture) is constant on each
  // of {Y <= b} and {Y > b}; no density is needed.
  const double log_lr_small = -std::log1p(-w);
  const double log_lr_big =
      std::log(tail_b) - std::log((1.0 - w) * tail_b + w);

  ISAcc acc;
  fold_indexed(n, threads, acc, [&](ISAcc& a, std::uint64_t i) {
    SampleStream rng(config.seed, i);
    double s = 0.0;
    KahanSum area;
    double logw = 0.0;
    bool truncated = true;
    for (std::uint64_t step = 0; step < config.max_steps; ++step) {
      const double u1 = rng.next_u01();
      const double u2 = rng.next_u01();
      const double y_draw =
          u1 < w ? model.y_quantile(u2 * tail_b) : model.y_quantile(u2);
      logw += y_draw > b ? log_lr_big : log_lr_small;
      s += y_draw - model.shift_c;
      if (s <= 0.0) {
        truncated = false;
        break;
      }
      area.add(s);
    }
    if (truncated) {
      ++a.truncated;
      return;
    }
    if (area.value() > x) {
      ++a.hits;
      if (logw > 700.0) {
        ++a.overflowed;
        logw = 700.0;
      }
      const double weight = std::exp(logw);
      a.sum_w.add(weight);
      a.sum_w2.add(weight * weight);
    }
  });

  TailEstimate e;
  e.method = Method::is_mixture;
  e.n = n;
  e.truncated_count = acc.truncated;
  const double dn = static_cast<double>(n);
  e.p_hat = acc.sum_w.value() / dn;
  const double var =
      std::max(0.0, (acc.sum_w2.value() / dn - e.p_hat * e.p_hat)) *
      (dn / std::max(1.0, dn - 1.0));
  e.stderr_ = std::sqrt(var / dn);
  e.ci95 = binomial_ci95(e.p_hat, e.stderr_, e.n, acc.truncated);
  if (acc.overflowed > 0)
    throw std::runtime_error("IS likelihood ratio overflow on event paths");
  return e;
}

namespace {

struct TauMomentsAcc {
  KahanSum sum_tau;
  KahanSum sum_tau2;
  KahanSum sum_final;
  KahanSum sum_final2;
  std::uint64_t n_ok = 0;
  std::uint64_t truncated = 0;
  void add(const ExcursionOutcome& o) {
    if (o.truncated) {
      ++truncated;
      return;
    }
    ++n_ok;
    const double t = static_cast<double>(o.tau);
    sum_tau.add(t);
    sum_tau2.add(t * t);
    sum_final.add(o.final_value);
    sum_final2.add(o.final_value * o.final_value);
  }
  void merge(const TauMomentsAcc& o) {
    sum_tau.merge(o.sum_tau);
    sum_tau2.merge(o.sum_tau2);
    sum_final.merge(o.sum_final);
    sum_final2.merge(o.sum_final2);
    n_ok += o.n_ok;
    truncated += o.truncated;
  }
};

}  // namespace

MeanTauEstimate estimate_e_tau(const IncrementModel& model, std::uint64_t n,
                               const SimConfig& config, unsigned threads) {
  TauMomentsAcc acc;
  fold_excursions(model, config, n, threads, acc);
  if (acc.n_ok == 0)
    throw std::runtime_error("all paths truncated: configuration unusable");
  MeanTauEstimate r;
  const double dn = static_cast<double>(acc.n_ok);
  r.n = acc.n_ok + acc.truncated;
  r.truncated_count = acc.truncated;
  r.e_tau = acc.sum_tau.value() / dn;
  const double var_tau =
      std::max(0.0, acc.sum_tau2.value() / dn - r.e_tau * r.e_tau);
  r.stderr_ = std::sqrt(var_tau / dn);
  const double mean_final = acc.sum_final.value() / dn;
  r.wald_e_tau = mean_final / (-model.drift_a);
  const double var_final =
      std::max(0.0, acc.sum_final2.value() / dn - mean_final * mean_final);
  r.wald_stderr = std::sqrt(var_final / dn) / model.drift_a;
  return r;
}

namespace {

struct JointAcc {
  double x = 0.0;
  double y = 0.0;
  std::uint64_t hits = 0;
  std::uint64_t n_ok = 0;
  std::uint64_t truncated = 0;
  void add(const ExcursionOutcome& o) {
    if (o.truncated) {
      ++truncated;
      return;
    }
    ++n_ok;
    if (o.area > x && o.max > y) ++hits;
  }
  void merge(const JointAcc& o) {
    hits += o.hits;
    n_ok += o.n_ok;
    truncated += o.truncated;
  }
};

}  // namespace

JointTailEstimate joint_tail(const IncrementModel& model, double x, double y,
                             std::uint64_t n, const SimConfig& config,
                             const JointTailWindow& window, unsigned threads) {
  JointAcc acc;
  acc.x = x;
  acc.y = y;
  fold_excursions(model, config, n, threads, acc);
  JointTailEstimate r;
  r.estimate = binomial_estimate(acc.hits, acc.n_ok, acc.truncated, Method::naive);
  const double v = std::sqrt(2.0 * model.drift_a * x);
  if (model.lattice) {
    r.window_lo = 0.0;
    r.window_hi = 0.0;
    r.in_window = false;
    return r;
  }
  if (window.kind == JointTailWindow::Kind::regvar_a) {
    r.window_lo = window.epsilon * std::sqrt(x);
    r.window_hi = v;
  } else {
    r.window_lo = v - window.R * v / model.g.eval(v);
    r.window_hi = v;
  }
  r.in_window = y >= r.window_lo && y <= r.window_hi;
  return r;
}

namespace {

struct SigmaLawAcc {
  int k_max = 0;
  std::vector<std::uint64_t> sigma_hits;  // sigma_hits[k-1] = #{sigma_y = k}
  std::uint64_t cond_count = 0;
  std::vector<std::uint64_t> tau_gt;  // tau_gt[j] = #{tau > j}, j = 0..k_max-1
  KahanSum sum_tau;
  std::uint64_t n_ok = 0;
  std::uint64_t truncated = 0;

  void add(const ExcursionOutcome& o) {
    if (o.truncated) {
      ++truncated;
      return;
    }
    ++n_ok;
    sum_tau.add(static_cast<double>(o.tau));
    for (int j = 0; j < k_max; ++j)
      if (o.tau > static_cast<std::uint64_t>(j)) ++tau_gt[j];
    if (o.sigma[0] != 0) {
      ++cond_count;
      if (o.sigma[0] <= static_cast<std::uint64_t>(k_max))
        ++sigma_hits[o.sigma[0] - 1];
    }
  }
  void merge(const SigmaLawAcc& o) {
    cond_count += o.cond_count;
    n_ok += o.n_ok;
    truncated += o.truncated;
    sum_tau.merge(o.sum_tau);
    for (std::size_t i = 0; i < sigma_hits.size(); ++i)
      sigma_hits[i] += o.sigma_hits[i];
    for (std::size_t i = 0; i < tau_gt.size(); ++i) tau_gt[i] += o.tau_gt[i];
  }
};

}  // namespace

SigmaLawResult sigma_y_conditional_law(const IncrementModel& model, double y,
                                       int k_max, std::uint64_t n,
                                       const SimConfig& config,
                                       unsigned threads) {
  if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
  SimConfig cfg = config;
  cfg.levels = {y};
  SigmaLawAcc acc;
  acc.k_max = k_max;
  acc.sigma_hits.assign(k_max, 0);
  acc.tau_gt.assign(k_max, 0);
  fold_excursions(model, cfg, n, threads, acc);
  if (acc.cond_count == 0)
    throw std::runtime_error(
        "sigma_y law: no outcome exceeded y (level too high for this n)");

  SigmaLawResult r;
  r.y = y;
  r.n = acc.n_ok + acc.truncated;
  r.truncated_count = acc.truncated;
  r.cond_count = acc.cond_count;
  r.e_tau = acc.sum_tau.value() / static_cast<double>(acc.n_ok);
  r.empirical.resize(k_max);
  r.q.resize(k_max);
  double emp_sum = 0.0;
  double q_sum = 0.0;
  double tv = 0.0;
  for (int k = 1; k <= k_max; ++k) {
    r.empirical[k - 1] = static_cast<double>(acc.sigma_hits[k - 1]) /
                         static_cast<double>(acc.cond_count);
    r.q[k - 1] = static_cast<double>(acc.tau_gt[k - 1]) /
                 static_cast<double>(acc.n_ok) / r.e_tau;
    emp_sum += r.empirical[k - 1];
    q_sum += r.q[k - 1];
    tv += std::abs(r.empirical[k - 1] - r.q[k - 1]);
  }
  tv += std::abs((1.0 - emp_sum) - (1.0 - q_sum));
  r.total_variation = 0.5 * tv;
  return r;
}

namespace {

struct FixedHorizonAcc {
  std::vector<std::pair<double, double>> xy;
  std::vector<std::uint64_t> hits;
  std::uint64_t count = 0;
  void merge(const FixedHorizonAcc& o) {
    count += o.count;
    for (std::size_t i = 0; i < hits.size(); ++i) hits[i] += o.hits[i];
  }
};

}  // namespace

std::vector<TailEstimate> fixed_horizon_joint_tail(
    const IncrementModel& model, std::uint64_t n_steps,
    const std::vector<std::pair<double, double>>& xy_grid,
    std::uint64_t n_runs, std::uint64_t seed, unsigned threads) {
  FixedHorizonAcc acc;
  acc.xy = xy_grid;
  acc.hits.assign(xy_grid.size(), 0);
  fold_indexed(n_runs, threads, acc, [&](FixedHorizonAcc& a, std::uint64_t i) {
    const FixedHorizonOutcome o =
        simulate_fixed_horizon(model, n_steps, seed, i);
    ++a.count;
    for (std::size_t j = 0; j < a.xy.size(); ++j)
      if (o.area > a.xy[j].first && o.max_increment <= a.xy[j].second)
        ++a.hits[j];
  });
  std::vector<TailEstimate> out;
  out.reserve(xy_grid.size());
  for (std::size_t j = 0; j < xy_grid.size(); ++j)
    out.push_back(binomial_estimate(acc.hits[j], acc.count, 0, Method::naive));
  return out;
}

}  // namespace areatail
