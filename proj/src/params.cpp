#include "fsce/models/params.hpp"

#include <cmath>

namespace fsce {

Tensor glorot_uniform(Shape shape, int fan_in, int fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (std::int64_t i = 0; i < t.size(); ++i) t.data()[i] = rng.uniform(-a, a);
  return t;
}

Conv1dParams init_conv1d(int c_out, int c_in, int kw, Rng& rng) {
  Conv1dParams p;
  p.kernel = glorot_uniform({c_out, c_in, kw}, c_in * kw, c_out * kw, rng);
  p.bias = Tensor::zeros({c_out});
  return p;
}

Conv2dParams init_conv2d(int c_out, int c_in, int kh, int kw, Rng& rng) {
  Conv2dParams p;
  p.kernel = glorot_uniform({c_out, c_in, kh, kw}, c_in * kh * kw, c_out * kh * kw, rng);
  p.bias = Tensor::zeros({c_out});
  return p;
}

Tensor init_dense_w(int d_out, int d_in, Rng& rng) {
  return glorot_uniform({d_out, d_in}, d_in, d_out, rng);
}

}  // namespace fsce
