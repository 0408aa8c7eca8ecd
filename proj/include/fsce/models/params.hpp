#pragma once

#include "fsce/autodiff/ops.hpp"
#include "fsce/core/rng.hpp"

#include <string>
#include <vector>

namespace fsce {

struct Conv1dParams {
  Tensor kernel;  // (c_out, c_in, kw)
  Tensor bias;    // (c_out)
};

struct Conv2dParams {
  Tensor kernel;  // (c_out, c_in, kh, kw)
  Tensor bias;    // (c_out)
};

// Named handle into a model's parameter storage.  group 0 = theta_1
// (feature extractor, cross-attention, initialization net), group 1 =
// theta_2 (task attention, CE backbone).
struct ParamRef {
  std::string name;
  Tensor* tensor;
  int group;
};

Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng);
Conv1dParams init_conv1d(int c_out, int c_in, int kw, Rng& rng);
Conv2dParams init_conv2d(int c_out, int c_in, int kh, int kw, Rng& rng);
Tensor init_dense_w(int d_out, int d_in, Rng& rng);

}  // namespace fsce
