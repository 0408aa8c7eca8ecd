#pragma once

#include "fsce/channel/episode.hpp"

namespace fsce {

// Classical reference: piecewise-linear interpolation of the pilot LS values
// across all subcarriers, per real/imag component.  The tail wraps around
// circularly (the DFT response is periodic in the subcarrier index).
Eigen::MatrixX2d ls_interpolation_estimate(const PilotBlock& query);

// Mean squared error over the 2w real coordinates.
double response_mse(const Eigen::MatrixX2d& est, const Eigen::MatrixX2d& truth);

}  // namespace fsce
