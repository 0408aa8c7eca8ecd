#include "fsce/channel/scenario.hpp"

#include "fsce/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace fsce {

void ScenarioSpec::validate(int l_pad) const {
  if (tap_count_min < 1 || tap_count_min > tap_count_max || tap_count_max > l_pad)
    throw std::invalid_argument("scenario '" + name + "': bad tap count range");
  if (delay_spread_min < 0 || delay_spread_min > delay_spread_max ||
      delay_spread_max > l_pad - 1)
    throw std::invalid_argument("scenario '" + name + "': bad delay spread range");
  if (tap_count_max > delay_spread_min + 1)
    throw std::invalid_argument("scenario '" + name +
                                "': infeasible, tap count can exceed delay_spread+1");
  if (decay_exp_min > decay_exp_max)
    throw std::invalid_argument("scenario '" + name + "': bad decay exponent range");
  if (tap_jitter < 0)
    throw std::invalid_argument("scenario '" + name + "': negative tap jitter");
}

PowerDelayProfile sample_pdp(const ScenarioSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);

  const int taps = rng.uniform_int(spec.tap_count_min, spec.tap_count_max);
  const int spread = rng.uniform_int(spec.delay_spread_min, spec.delay_spread_max);
  const double gamma = rng.uniform(spec.decay_exp_min, spec.decay_exp_max);

  // First arrival is pinned to delay 0; the rest are drawn without
  // replacement from [1, spread] (partial Fisher-Yates).
  std::vector<int> pool(static_cast<std::size_t>(spread));
  std::iota(pool.begin(), pool.end(), 1);
  std::vector<int> delays = {0};
  for (int i = 0; i < taps - 1; ++i) {
    const int j = rng.uniform_int(i, static_cast<int>(pool.size()) - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
    delays.push_back(pool[static_cast<std::size_t>(i)]);
  }
  std::sort(delays.begin(), delays.end());

  PowerDelayProfile pdp;
  pdp.delays = std::move(delays);
  pdp.scenario_name = spec.name;
  pdp.powers.reserve(pdp.delays.size());
  double total = 0.0;
  for (int d : pdp.delays) {
    const double p = std::exp(-gamma * d + spec.tap_jitter * rng.normal());
    pdp.powers.push_back(p);
    total += p;
  }
  for (double& p : pdp.powers) p /= total;
  return pdp;
}

}  // namespace fsce
