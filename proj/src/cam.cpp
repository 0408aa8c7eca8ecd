#include "fsce/attention/cam.hpp"

#include <stdexcept>

namespace fsce {

FeatureExtractorParams FeatureExtractorParams::init(int hidden, int channels, Rng& rng) {
  FeatureExtractorParams fx;
  fx.l0 = init_conv1d(hidden, 2, 3, rng);
  fx.l1 = init_conv1d(channels, hidden, 3, rng);
  return fx;
}

CrossAttentionParams CrossAttentionParams::init(int w, int reduction, double tau, Rng& rng) {
  if (reduction <= 0 || w % reduction != 0)
    throw std::invalid_argument("cross-attention: width must be divisible by the reduction ratio");
  CrossAttentionParams p;
  p.reduction = reduction;
  p.tau = tau;
  const int mid = w / reduction;
  p.w1_support = init_dense_w(mid, w, rng);
  p.w2_support = init_dense_w(w, mid, rng);
  p.w1_query = init_dense_w(mid, w, rng);
  p.w2_query = init_dense_w(w, mid, rng);
  return p;
}

Tensor extract_features(const FeatureExtractorParams& fx, const Tensor& block) {
  if (block.rank() != 2 || block.extent(1) != 2)
    throw std::invalid_argument("extract_features: block must be (w, 2)");
  Tensor x = transpose2d(block);  // (2, w)
  x = relu(conv1d(x, fx.l0.kernel, fx.l0.bias));
  x = relu(conv1d(x, fx.l1.kernel, fx.l1.bias));
  return transpose2d(x);  // (w, c)
}

std::pair<Tensor, Tensor> correlation_maps(const FeatureMapPair& pair) {
  if (pair.p.rank() != 3 || pair.q.rank() != 2)
    throw std::invalid_argument("correlation_maps: P must be (n,w,c), Q (w,c)");
  const int n = pair.p.extent(0), w = pair.p.extent(1), c = pair.p.extent(2);
  if (pair.q.extent(0) != w || pair.q.extent(1) != c)
    throw std::invalid_argument("correlation_maps: P and Q must share w and c");
  Tensor p_rows = l2_normalize_rows(reshape(pair.p, {n * w, c}));
  Tensor q_rows = l2_normalize_rows(pair.q);
  Tensor r_p = matmul(p_rows, transpose2d(q_rows));  // (nw, w)
  Tensor r_q = transpose2d(r_p);                     // (w, nw)
  return {r_p, r_q};
}

Tensor fusion_attention(const Tensor& r, const Tensor& w1, const Tensor& w2, double tau,
                        int kernel_blocks, int softmax_blocks) {
  if (r.rank() != 2) throw std::invalid_argument("fusion_attention: R must be rank 2");
  const int m = r.extent(0), k_total = r.extent(1);
  if (kernel_blocks < 1 || k_total % kernel_blocks != 0)
    throw std::invalid_argument("fusion_attention: bad kernel block count");
  const int k = k_total / kernel_blocks;
  if (w1.extent(1) != k || w2.extent(0) != k || w1.extent(0) != w2.extent(1))
    throw std::invalid_argument("fusion_attention: meta-learner shapes disagree with R");

  Tensor gap = global_average_pool(r);                    // (k_total)
  Tensor rows = reshape(gap, {kernel_blocks, k});         // one row per block
  Tensor hidden = relu(matmul(rows, transpose2d(w1)));    // (blocks, k/r)
  Tensor kernel = matmul(hidden, transpose2d(w2));        // (blocks, k)
  Tensor scores = matmul(r, reshape(kernel, {k_total, 1}));  // (m, 1)

  if (softmax_blocks == 1) return softmax_temp(reshape(scores, {m}), tau);
  if (m % softmax_blocks != 0)
    throw std::invalid_argument("fusion_attention: bad softmax block count");
  Tensor blocks = reshape(scores, {softmax_blocks, m / softmax_blocks});
  return reshape(softmax_temp_rows(blocks, tau), {m});
}

AttentionOutput apply_cross_attention(const FeatureMapPair& pair, const Tensor& a_p,
                                      const Tensor& a_q) {
  const int n = pair.p.extent(0), w = pair.p.extent(1), c = pair.p.extent(2);
  if (a_p.rank() != 1 || a_p.extent(0) != n * w)
    throw std::invalid_argument("apply_cross_attention: A_p must have length nw");
  if (a_q.rank() != 1 || a_q.extent(0) != w)
    throw std::invalid_argument("apply_cross_attention: A_q must have length w");

  AttentionOutput out;
  out.a_p = a_p;
  out.a_q = a_q;
  out.weighted_p = mul_elementwise(pair.p, reshape(add_scalar(a_p, 1.0), {n, w, 1}));
  Tensor wq = mul_elementwise(pair.q, reshape(add_scalar(a_q, 1.0), {w, 1}));
  std::vector<Tensor> copies(static_cast<std::size_t>(n), reshape(wq, {1, w, c}));
  out.weighted_q_pairs = concat(copies, 0);
  return out;
}

Tensor cam_forward(const std::vector<Tensor>& support_blocks, const Tensor& query_block,
                   const FeatureExtractorParams& fx, const CrossAttentionParams& cam,
                   bool zero_attention) {
  const int n = static_cast<int>(support_blocks.size());
  if (n < 1)
    throw std::invalid_argument("cam_forward: at least one support block required "
                                "(the n=0 baseline bypasses the CAM)");
  std::vector<Tensor> feats;
  feats.reserve(support_blocks.size());
  for (const Tensor& b : support_blocks) {
    Tensor f = extract_features(fx, b);  // (w, c)
    feats.push_back(reshape(f, {1, f.extent(0), f.extent(1)}));
  }
  FeatureMapPair pair;
  pair.p = concat(feats, 0);                 // (n, w, c)
  pair.q = extract_features(fx, query_block);  // (w, c)
  const int w = pair.q.extent(0), c = pair.q.extent(1);

  AttentionOutput att;
  if (zero_attention) {
    att = apply_cross_attention(pair, Tensor::zeros({n * w}), Tensor::zeros({w}));
  } else {
    auto [r_p, r_q] = correlation_maps(pair);
    Tensor a_p = fusion_attention(r_p, cam.w1_support, cam.w2_support, cam.tau, 1,
                                  cam.per_block_softmax ? n : 1);
    Tensor a_q = fusion_attention(r_q, cam.w1_query, cam.w2_query, cam.tau, n, 1);
    att = apply_cross_attention(pair, a_p, a_q);
  }

  // Interleave (P_i, Q_i) pairs along axis 0: (n,2,w,c) -> (2n,w,c).
  Tensor stacked = concat({reshape(att.weighted_p, {n, 1, w, c}),
                           reshape(att.weighted_q_pairs, {n, 1, w, c})},
                          1);
  return reshape(stacked, {2 * n, w, c});
}

}  // namespace fsce
