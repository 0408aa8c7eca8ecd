#pragma once

#include "fsce/models/params.hpp"

namespace fsce {

// Task attention: a 2D conv stack over the support blocks' LS arrays
// followed by one FC head per attended backbone layer.  The (n, w, 2) input
// is viewed as a single-channel n x 2w plane (re/im interleaved along the
// width), so the module accepts any support count.
struct TaskAttentionParams {
  Conv2dParams c0;            // 1 -> channels
  Conv2dParams c1;            // channels -> channels
  std::vector<Tensor> fc_w;   // per layer: (c_i, d_feat)
  std::vector<Tensor> fc_b;   // per layer: (c_i)
  bool exact_printed_form = false;  // a = 1/(1+exp(+W f)), no bias

  int d_feat() const { return c1.kernel.extent(0); }
  int head_count() const { return static_cast<int>(fc_w.size()); }

  static TaskAttentionParams init(int channels, int kernel, const std::vector<int>& head_dims,
                                  Rng& rng);
};

// Pooled d_feat descriptor of the support set.
Tensor tam_features(const TaskAttentionParams& tam, const Tensor& support /* (n,w,2) */);
// Attention vector for backbone layer `layer` from precomputed features.
Tensor tam_head(const TaskAttentionParams& tam, const Tensor& features, int layer);
// Full chain; output has the attended layer's channel count, entries in (0,1).
Tensor tam_forward(const TaskAttentionParams& tam, const Tensor& support, int layer);

// Stacks the support blocks' LS estimates into the TAM input (n, w, 2).
Tensor support_stack(const std::vector<Eigen::MatrixX2d>& ls_arrays);

}  // namespace fsce
