#pragma once

#include "fsce/models/params.hpp"

#include <functional>

namespace fsce {

// CE backbone: N+2 conv1d layers, relu after every layer except the last.
// Layers 0..N are the attended ones; the final layer emits the (2, w)
// estimate unattended.
struct CEBackboneParams {
  std::vector<Conv1dParams> layers;
  int n = 0;

  static CEBackboneParams init(int n, int in_channels, int hidden, int kernel, Rng& rng);
  std::vector<int> attended_channels() const;
};

// Called after each attended layer's activation with (feature map, layer
// index); returns the (possibly re-weighted) map.
using LayerHook = std::function<Tensor(const Tensor&, int)>;

Tensor backbone_forward(const CEBackboneParams& ce, const Tensor& input_cw,
                        const LayerHook& hook);

// n = 0 baseline: the zero-filled masked query LS straight through the
// backbone, no attention, no initialization network.  Returns (w, 2).
Tensor backbone_only_forward(const CEBackboneParams& ce, const Eigen::MatrixX2d& query_ls);

}  // namespace fsce
