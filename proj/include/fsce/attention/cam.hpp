#pragma once

#include "fsce/models/params.hpp"

namespace fsce {

// Support/query feature maps entering the cross-attention block.
struct FeatureMapPair {
  Tensor p;  // (n, w, c)
  Tensor q;  // (w, c)
};

// Shared 1D conv feature extractor mapping one pilot block (w, 2) to a
// feature map (w, c); trained end-to-end as part of theta_CAM.
struct FeatureExtractorParams {
  Conv1dParams l0;  // 2 -> hidden
  Conv1dParams l1;  // hidden -> c
  static FeatureExtractorParams init(int hidden, int channels, Rng& rng);
};

// Meta-learner weights of the two fusion branches.  Both branches use
// (w/r, w) x (w, w/r) weights; the query branch applies them per support
// block (weight-shared across blocks) so its nw-length kernel is built from
// w-sized parameters and support-order equivariance holds.
struct CrossAttentionParams {
  Tensor w1_support, w2_support;
  Tensor w1_query, w2_query;
  double tau = 0.05;
  int reduction = 4;
  bool per_block_softmax = false;  // n per-block softmaxes over A_p instead of one joint softmax
  static CrossAttentionParams init(int w, int reduction, double tau, Rng& rng);
};

struct AttentionOutput {
  Tensor a_p;               // (nw), positive, sums to 1
  Tensor a_q;               // (w), positive, sums to 1
  Tensor weighted_p;        // (n, w, c)
  Tensor weighted_q_pairs;  // (n, w, c), query map duplicated n times
};

Tensor extract_features(const FeatureExtractorParams& fx, const Tensor& block /* (w,2) */);

// Cosine-similarity correlation maps between all nw support positions and
// the w query positions: R_p (nw, w) and its transpose R_q (w, nw).
std::pair<Tensor, Tensor> correlation_maps(const FeatureMapPair& pair);

// GAP over the m rows of R, meta-learner kernel, per-position scores
// R.kernel / tau, softmax over the m positions.  `kernel_blocks` > 1 builds
// the kernel blockwise with shared weights (query branch).
Tensor fusion_attention(const Tensor& r, const Tensor& w1, const Tensor& w2, double tau,
                        int kernel_blocks = 1, int softmax_blocks = 1);

// Weights P by (1 + A_p) and the n duplicated copies of Q by (1 + A_q).
AttentionOutput apply_cross_attention(const FeatureMapPair& pair, const Tensor& a_p,
                                      const Tensor& a_q);

// Full cross-attention chain: shared feature extraction, correlation,
// fusion attention per branch, re-weighting, and interleaving of the
// (P_i, Q_i) pairs into F_initial (2n, w, c).
Tensor cam_forward(const std::vector<Tensor>& support_blocks /* each (w,2) */,
                   const Tensor& query_block /* (w,2) */, const FeatureExtractorParams& fx,
                   const CrossAttentionParams& cam, bool zero_attention = false);

}  // namespace fsce
