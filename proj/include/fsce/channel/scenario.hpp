#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace fsce {

// Channel coefficients are padded to this many taps; with w = 72 subcarriers
// the support blocks (n x 72 x 2) and the true responses (72 x 2) share one
// width.
inline constexpr int kLPad = 72;
inline constexpr int kWidth = 72;
inline constexpr int kQueryPilotStride = 4;

// A scenario is a distribution over power delay profiles.  Per-scenario
// parameter ranges are kept disjoint across scenarios so that environments
// stay separable.
struct ScenarioSpec {
  std::string name;
  int tap_count_min = 1;
  int tap_count_max = 1;
  int delay_spread_min = 0;   // largest usable delay index, inclusive
  int delay_spread_max = 0;
  double decay_exp_min = 0.0;  // per-tap exponential decay rate
  double decay_exp_max = 0.0;
  double tap_jitter = 0.0;     // std of per-tap log-power perturbation

  void validate(int l_pad = kLPad) const;
};

// Average linear power per delay tap; normalized to sum 1.  One PDP is one
// propagation environment.
struct PowerDelayProfile {
  std::vector<int> delays;      // strictly increasing, first tap at 0
  std::vector<double> powers;   // > 0, sum 1
  std::string scenario_name;
  int pdp_id = 0;

  int tap_count() const { return static_cast<int>(delays.size()); }
};

PowerDelayProfile sample_pdp(const ScenarioSpec& spec, std::uint64_t seed);

}  // namespace fsce
