#include "fsce/models/backbone.hpp"

#include <stdexcept>

namespace fsce {

CEBackboneParams CEBackboneParams::init(int n, int in_channels, int hidden, int kernel,
                                        Rng& rng) {
  if (n < 0) throw std::invalid_argument("backbone: N must be >= 0");
  CEBackboneParams ce;
  ce.n = n;
  int cin = in_channels;
  for (int i = 0; i <= n; ++i) {
    ce.layers.push_back(init_conv1d(hidden, cin, kernel, rng));
    cin = hidden;
  }
  ce.layers.push_back(init_conv1d(2, cin, kernel, rng));
  return ce;
}

std::vector<int> CEBackboneParams::attended_channels() const {
  std::vector<int> out;
  for (int i = 0; i <= n; ++i)
    out.push_back(layers[static_cast<std::size_t>(i)].kernel.extent(0));
  return out;
}

Tensor backbone_forward(const CEBackboneParams& ce, const Tensor& input_cw,
                        const LayerHook& hook) {
  if (static_cast<int>(ce.layers.size()) != ce.n + 2)
    throw std::invalid_argument("backbone: layer count must be N+2");
  Tensor f = input_cw;
  for (int i = 0; i <= ce.n; ++i) {
    const auto& l = ce.layers[static_cast<std::size_t>(i)];
    f = relu(conv1d(f, l.kernel, l.bias));
    if (hook) f = hook(f, i);
  }
  const auto& last = ce.layers.back();
  return conv1d(f, last.kernel, last.bias);  // (2, w), no attention on the final layer
}

Tensor backbone_only_forward(const CEBackboneParams& ce, const Eigen::MatrixX2d& query_ls) {
  Tensor in = transpose2d(Tensor::from_matrix(query_ls));  // (2, w)
  Tensor out = backbone_forward(ce, in, {});
  return transpose2d(out);  // (w, 2)
}

}  // namespace fsce
