#pragma once

#include "fsce/attention/cam.hpp"
#include "fsce/attention/tam.hpp"
#include "fsce/channel/episode.hpp"
#include "fsce/models/backbone.hpp"

namespace fsce {

enum class ModelKind { FslFull, FslNoCam, BackboneOnly, BackboneSelfAttention };

enum class LossKind { Mse, BceScaled };

std::string model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& s);
std::string loss_kind_name(LossKind k);
LossKind loss_kind_from_name(const std::string& s);

struct ModelConfig {
  int width = kWidth;
  int n_support = 16;
  int feature_channels = 16;  // c
  int extractor_hidden = 16;
  int reduction = 4;          // r
  double tau = 0.05;
  int backbone_n = 3;         // N (N+2 conv layers)
  int backbone_hidden = 32;
  int backbone_kernel = 5;
  int cin_hidden = 8;
  int cin_kernel = 3;
  int cin_head_kernel = 5;
  int tam_channels = 8;
  int tam_kernel = 3;
  int senet_reduction = 4;
  bool per_block_softmax = false;
  bool tam_exact_printed_form = false;
  bool backbone_query_skip = false;  // feed raw masked LS as two extra input channels
};

// Convolutional initialization network: collapses F_initial's 2n planes to a
// single (w, c) plane, then a 1D conv maps the c feature channels to the
// (w, 2) initialized query block.
struct InitNetParams {
  Conv2dParams c0;   // 2n -> hidden
  Conv2dParams c1;   // hidden -> 1
  Conv1dParams head; // c -> 2
  static InitNetParams init(int n_support, int hidden, int kernel, int c, int head_kernel,
                            Rng& rng);
};

// SENet-style per-layer channel attention (ablation baseline): weights come
// from the layer's own feature map rather than the support set.
struct SelfAttentionParams {
  std::vector<Tensor> fc1_w, fc1_b, fc2_w, fc2_b;
  static SelfAttentionParams init(const std::vector<int>& channels, int reduction, Rng& rng);
};

// Full few-shot estimator.  theta_1 = [extractor, cam, cin] drives the
// initialization loss; theta_2 = [tam, ce] drives the estimation loss.
struct FSLModel {
  ModelKind kind = ModelKind::FslFull;
  ModelConfig cfg;
  FeatureExtractorParams extractor;
  CrossAttentionParams cam;
  InitNetParams cin;
  TaskAttentionParams tam;
  SelfAttentionParams senet;
  CEBackboneParams ce;
  LossKind loss_kind = LossKind::Mse;
  Tensor bce_lo, bce_hi;  // (w, 2) target bounds, defined for BceScaled only

  static FSLModel init(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed);

  std::vector<ParamRef> parameters();
  std::vector<ParamRef> theta1();
  std::vector<ParamRef> theta2();

  // Tracked copy sharing this model's storage; watch order equals
  // parameters() order.
  FSLModel bind(Tape& tape) const;
};

struct ForwardOverrides {
  bool tam_identity = false;        // skip the a_task multiplications
  bool cam_zero_attention = false;  // weight feature maps by exactly 1
};

struct FslOutput {
  Tensor s_initial;  // (w, 2); undefined on the n = 0 path
  Tensor h_est;      // (w, 2) raw network output
};

// Initialization network: F_initial (2n, w, c) -> s_initial (w, 2).
Tensor cin_forward(const InitNetParams& cin, const Tensor& f_initial);

// Algorithm dataflow: CAM -> CIN -> backbone with task attention after each
// attended layer.  An episode without support blocks routes through the
// backbone alone.
FslOutput fsl_forward(const FSLModel& model, const Episode& episode,
                      const ForwardOverrides& overrides = {});

// Maps the raw network output to a channel estimate in natural units.
Eigen::MatrixX2d estimate_response(const FSLModel& model, const Tensor& h_est);

}  // namespace fsce
