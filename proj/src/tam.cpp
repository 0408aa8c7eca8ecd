#include "fsce/attention/tam.hpp"

#include <stdexcept>

namespace fsce {

TaskAttentionParams TaskAttentionParams::init(int channels, int kernel,
                                              const std::vector<int>& head_dims, Rng& rng) {
  TaskAttentionParams tam;
  tam.c0 = init_conv2d(channels, 1, kernel, kernel, rng);
  tam.c1 = init_conv2d(channels, channels, kernel, kernel, rng);
  for (int c : head_dims) {
    tam.fc_w.push_back(init_dense_w(c, channels, rng));
    tam.fc_b.push_back(Tensor::zeros({c}));
  }
  return tam;
}

Tensor tam_features(const TaskAttentionParams& tam, const Tensor& support) {
  if (support.rank() != 3 || support.extent(2) != 2)
    throw std::invalid_argument("tam_features: support must be (n, w, 2)");
  const int n = support.extent(0), w = support.extent(1);
  Tensor x = reshape(support, {1, n, 2 * w});
  x = relu(conv2d(x, tam.c0.kernel, tam.c0.bias));
  x = relu(conv2d(x, tam.c1.kernel, tam.c1.bias));
  const int ch = x.extent(0);
  // per-channel spatial mean
  return global_average_pool(transpose2d(reshape(x, {ch, n * 2 * w})));
}

Tensor tam_head(const TaskAttentionParams& tam, const Tensor& features, int layer) {
  if (layer < 0 || layer >= tam.head_count())
    throw std::invalid_argument("tam_head: layer index out of range");
  const auto& w = tam.fc_w[static_cast<std::size_t>(layer)];
  const auto& b = tam.fc_b[static_cast<std::size_t>(layer)];
  if (tam.exact_printed_form)
    return sigmoid(scale(dense(features, w, Tensor::zeros({w.extent(0)})), -1.0));
  return sigmoid(dense(features, w, b));
}

Tensor tam_forward(const TaskAttentionParams& tam, const Tensor& support, int layer) {
  return tam_head(tam, tam_features(tam, support), layer);
}

Tensor support_stack(const std::vector<Eigen::MatrixX2d>& ls_arrays) {
  if (ls_arrays.empty()) throw std::invalid_argument("support_stack: empty support set");
  const int n = static_cast<int>(ls_arrays.size());
  const int w = static_cast<int>(ls_arrays[0].rows());
  Tensor out({n, w, 2});
  double* d = out.data();
  for (const auto& ls : ls_arrays) {
    if (static_cast<int>(ls.rows()) != w)
      throw std::invalid_argument("support_stack: inconsistent widths");
    for (int r = 0; r < w; ++r) {
      *d++ = ls(r, 0);
      *d++ = ls(r, 1);
    }
  }
  return out;
}

}  // namespace fsce
