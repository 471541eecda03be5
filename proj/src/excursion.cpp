#include "areatail/excursion.hpp"

#include <limits>

namespace areatail {

ExcursionOutcome simulate_excursion(const IncrementModel& model,
                                    const SimConfig& config,
                                    std::uint64_t stream_index) {
  SampleStream rng(config.seed, stream_index);
  return run_excursion([&]() { return model.sample(rng); }, config.max_steps,
                       std::span<const double>(config.levels));
}

std::vector<ExcursionOutcome> batch_simulate(const IncrementModel& model,
                                             const SimConfig& config,
                                             std::uint64_t n) {
  config.validate();
  std::vector<ExcursionOutcome> out;
  out.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i)
    out.push_back(simulate_excursion(model, config, i));
  return out;
}

FixedHorizonOutcome simulate_fixed_horizon(const IncrementModel& model,
                                           std::uint64_t n_steps,
                                           std::uint64_t seed,
                                           std::uint64_t stream_index) {
  SampleStream rng(seed, stream_index);
  FixedHorizonOutcome out;
  out.max_increment = -std::numeric_limits<double>::infinity();
  KahanSum area;
  double s = 0.0;
  for (std::uint64_t k = 0; k < n_steps; ++k) {
    const double x = model.sample(rng);
    if (x > out.max_increment) out.max_increment = x;
    s += x;
    area.add(s);
  }
  out.area = area.value();
  return out;
}

}  // namespace areatail
