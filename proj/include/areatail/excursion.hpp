#pragma once

#include <array>
#include <atomic>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include "areatail/increment_model.hpp"
#include "areatail/numeric.hpp"
#include "areatail/rng.hpp"

namespace areatail {

inline constexpr std::size_t kMaxLevels = 4;

struct SimConfig {
  std::uint64_t max_steps = 10'000'000;
  std::vector<double> levels;  // y values whose first-crossing index is tracked
  std::uint64_t seed = 0;
  void validate() const {
    if (max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");
    if (levels.size() > kMaxLevels)
      throw std::invalid_argument("at most 4 sigma_y levels are tracked");
  }
};

// One excursion of the walk started at S_0 = 0 and stopped at the first
// n >= 1 with S_n <= 0. The area is A_tau = sum_{k=0}^{tau-1} S_k (S_0
// contributes nothing), accumulated with compensated summation.
struct ExcursionOutcome {
  std::uint64_t tau = 0;
  double area = 0.0;
  double max = 0.0;
  double final_value = 0.0;                   // S_tau (<= 0 unless truncated)
  std::array<std::uint64_t, kMaxLevels> sigma{};  // 0 = level never exceeded
  bool truncated = false;
};

// Core walk loop over any increment source; used both by the model-driven
// simulator and by tests that inject a fixed increment sequence.
template <class NextIncrement>
ExcursionOutcome run_excursion(NextIncrement&& next, std::uint64_t max_steps,
                               std::span<const double> levels) {
  ExcursionOutcome out;
  KahanSum area;
  double s = 0.0;
  for (std::uint64_t n = 1; n <= max_steps; ++n) {
    s += next();
    if (s <= 0.0) {
      out.tau = n;
      out.final_value = s;
      out.area = area.value();
      return out;
    }
    area.add(s);
    if (s > out.max) out.max = s;
    for (std::size_t li = 0; li < levels.size(); ++li) {
      if (out.sigma[li] == 0 && s > levels[li]) out.sigma[li] = n;
    }
  }
  out.tau = max_steps;
  out.final_value = s;
  out.area = area.value();
  out.truncated = true;
  return out;
}

ExcursionOutcome simulate_excursion(const IncrementModel& model,
                                    const SimConfig& config,
                                    std::uint64_t stream_index);

// Materialized batch for small n (tests, debug dumps).
std::vector<ExcursionOutcome> batch_simulate(const IncrementModel& model,
                                             const SimConfig& config,
                                             std::uint64_t n);

// A_n = S_1 + ... + S_n over a fixed horizon (no stopping), together with
// the largest increment; this is the object bounded by the truncated-MGF
// inequality.
struct FixedHorizonOutcome {
  double area = 0.0;
  double max_increment = 0.0;
};

FixedHorizonOutcome simulate_fixed_horizon(const IncrementModel& model,
                                           std::uint64_t n_steps,
                                           std::uint64_t seed,
                                           std::uint64_t stream_index);

namespace detail {
inline constexpr std::uint64_t kFoldBlock = 8192;
}

// Folds the n outcomes for stream indices 0..n-1 into Acc. Work is split
// into fixed blocks of stream indices; per-block partials are merged in
// block order afterwards, so the result is bit-identical for any thread
// count. Acc needs add(const ExcursionOutcome&) and merge(const Acc&).
template <class Acc>
void fold_excursions(const IncrementModel& model, const SimConfig& config,
                     std::uint64_t n, unsigned threads, Acc& acc) {
  config.validate();
  if (n == 0) return;
  const std::uint64_t n_blocks = (n + detail::kFoldBlock - 1) / detail::kFoldBlock;
  if (threads == 0) threads = 1;
  threads = static_cast<unsigned>(
      std::min<std::uint64_t>(threads, n_blocks));

  std::vector<Acc> partials(n_blocks, acc);  // copies of the empty prototype
  std::atomic<std::uint64_t> next_block{0};
  auto work = [&]() {
    for (;;) {
      const std::uint64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      const std::uint64_t lo = b * detail::kFoldBlock;
      const std::uint64_t hi = std::min(n, lo + detail::kFoldBlock);
      Acc& local = partials[b];
      for (std::uint64_t i = lo; i < hi; ++i)
        local.add(simulate_excursion(model, config, i));
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  for (const Acc& part : partials) acc.merge(part);
}

}  // namespace areatail
