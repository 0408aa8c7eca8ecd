#pragma once

#include "fsce/channel/scenario.hpp"

#include <Eigen/Core>

#include <complex>
#include <cstdint>
#include <vector>

namespace fsce {

// Instantaneous channel impulse response: l_pad complex taps, exactly zero
// outside the PDP's delay set.
struct ChannelRealization {
  std::vector<std::complex<double>> taps;  // length l_pad
  int pdp_id = 0;

  int l_pad() const { return static_cast<int>(taps.size()); }
  // interleaved re/im, length 2*l_pad
  std::vector<double> flat_reals() const;
  static ChannelRealization from_flat(const double* reals, int l_pad, int pdp_id);
};

// Per-tap Rayleigh fading: tap l is zero-mean circular complex Gaussian with
// variance powers[l].
ChannelRealization realize_channel(const PowerDelayProfile& pdp, std::uint64_t seed,
                                   int l_pad = kLPad);

// H_k = sum_l h_l exp(-j 2 pi k d_l / w), k = 0..w-1, returned as (w, 2)
// real/imag columns.  Requires w >= l_pad.
Eigen::MatrixX2d freq_response(const ChannelRealization& h, int w);

// Time-domain taps recovered from a full frequency response by inverse DFT;
// exposed for inspection.
std::vector<std::complex<double>> time_taps_from_response(const Eigen::MatrixX2d& resp);

}  // namespace fsce
