#include "fsce/models/fsl.hpp"

#include <stdexcept>

namespace fsce {

std::string model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::FslFull: return "fsl_full";
    case ModelKind::FslNoCam: return "fsl_no_cam";
    case ModelKind::BackboneOnly: return "backbone_only";
    case ModelKind::BackboneSelfAttention: return "backbone_self_attention";
  }
  throw std::logic_error("unknown model kind");
}

ModelKind model_kind_from_name(const std::string& s) {
  if (s == "fsl_full") return ModelKind::FslFull;
  if (s == "fsl_no_cam") return ModelKind::FslNoCam;
  if (s == "backbone_only") return ModelKind::BackboneOnly;
  if (s == "backbone_self_attention") return ModelKind::BackboneSelfAttention;
  throw std::invalid_argument("unknown model kind '" + s + "'");
}

std::string loss_kind_name(LossKind k) {
  return k == LossKind::Mse ? "mse" : "bce_scaled";
}

LossKind loss_kind_from_name(const std::string& s) {
  if (s == "mse") return LossKind::Mse;
  if (s == "bce_scaled") return LossKind::BceScaled;
  throw std::invalid_argument("unknown loss kind '" + s + "'");
}

InitNetParams InitNetParams::init(int n_support, int hidden, int kernel, int c,
                                  int head_kernel, Rng& rng) {
  InitNetParams cin;
  cin.c0 = init_conv2d(hidden, 2 * n_support, kernel, kernel, rng);
  cin.c1 = init_conv2d(1, hidden, kernel, kernel, rng);
  cin.head = init_conv1d(2, c, head_kernel, rng);
  return cin;
}

SelfAttentionParams SelfAttentionParams::init(const std::vector<int>& channels, int reduction,
                                              Rng& rng) {
  SelfAttentionParams p;
  for (int c : channels) {
    const int mid = std::max(1, c / reduction);
    p.fc1_w.push_back(init_dense_w(mid, c, rng));
    p.fc1_b.push_back(Tensor::zeros({mid}));
    p.fc2_w.push_back(init_dense_w(c, mid, rng));
    p.fc2_b.push_back(Tensor::zeros({c}));
  }
  return p;
}

FSLModel FSLModel::init(ModelKind kind, const ModelConfig& cfg, std::uint64_t seed) {
  FSLModel m;
  m.kind = kind;
  m.cfg = cfg;
  Rng rng(mix_seed(seed, 0x10de1));

  const bool has_cam = kind == ModelKind::FslFull;
  const bool has_tam = kind == ModelKind::FslFull || kind == ModelKind::FslNoCam;

  int backbone_in = 2;
  if (has_cam && cfg.backbone_query_skip) backbone_in = 4;
  m.ce = CEBackboneParams::init(cfg.backbone_n, backbone_in, cfg.backbone_hidden,
                                cfg.backbone_kernel, rng);
  const auto attended = m.ce.attended_channels();

  if (has_cam) {
    m.extractor = FeatureExtractorParams::init(cfg.extractor_hidden, cfg.feature_channels, rng);
    m.cam = CrossAttentionParams::init(cfg.width, cfg.reduction, cfg.tau, rng);
    m.cam.per_block_softmax = cfg.per_block_softmax;
    m.cin = InitNetParams::init(cfg.n_support, cfg.cin_hidden, cfg.cin_kernel,
                                cfg.feature_channels, cfg.cin_head_kernel, rng);
  }
  if (has_tam) {
    m.tam = TaskAttentionParams::init(cfg.tam_channels, cfg.tam_kernel, attended, rng);
    m.tam.exact_printed_form = cfg.tam_exact_printed_form;
  }
  if (kind == ModelKind::BackboneSelfAttention)
    m.senet = SelfAttentionParams::init(attended, cfg.senet_reduction, rng);
  return m;
}

namespace {

template <typename Model, typename Fn>
void visit_params(Model& m, Fn&& fn) {
  const bool has_cam = m.kind == ModelKind::FslFull;
  const bool has_tam = m.kind == ModelKind::FslFull || m.kind == ModelKind::FslNoCam;
  if (has_cam) {
    fn("extractor.l0.kernel", m.extractor.l0.kernel, 0);
    fn("extractor.l0.bias", m.extractor.l0.bias, 0);
    fn("extractor.l1.kernel", m.extractor.l1.kernel, 0);
    fn("extractor.l1.bias", m.extractor.l1.bias, 0);
    fn("cam.w1_support", m.cam.w1_support, 0);
    fn("cam.w2_support", m.cam.w2_support, 0);
    fn("cam.w1_query", m.cam.w1_query, 0);
    fn("cam.w2_query", m.cam.w2_query, 0);
    fn("cin.c0.kernel", m.cin.c0.kernel, 0);
    fn("cin.c0.bias", m.cin.c0.bias, 0);
    fn("cin.c1.kernel", m.cin.c1.kernel, 0);
    fn("cin.c1.bias", m.cin.c1.bias, 0);
    fn("cin.head.kernel", m.cin.head.kernel, 0);
    fn("cin.head.bias", m.cin.head.bias, 0);
  }
  if (has_tam) {
    fn("tam.c0.kernel", m.tam.c0.kernel, 1);
    fn("tam.c0.bias", m.tam.c0.bias, 1);
    fn("tam.c1.kernel", m.tam.c1.kernel, 1);
    fn("tam.c1.bias", m.tam.c1.bias, 1);
    for (std::size_t i = 0; i < m.tam.fc_w.size(); ++i) {
      fn("tam.fc" + std::to_string(i) + ".w", m.tam.fc_w[i], 1);
      fn("tam.fc" + std::to_string(i) + ".b", m.tam.fc_b[i], 1);
    }
  }
  if (m.kind == ModelKind::BackboneSelfAttention) {
    for (std::size_t i = 0; i < m.senet.fc1_w.size(); ++i) {
      fn("senet.fc1_" + std::to_string(i) + ".w", m.senet.fc1_w[i], 1);
      fn("senet.fc1_" + std::to_string(i) + ".b", m.senet.fc1_b[i], 1);
      fn("senet.fc2_" + std::to_string(i) + ".w", m.senet.fc2_w[i], 1);
      fn("senet.fc2_" + std::to_string(i) + ".b", m.senet.fc2_b[i], 1);
    }
  }
  for (std::size_t i = 0; i < m.ce.layers.size(); ++i) {
    fn("ce.l" + std::to_string(i) + ".kernel", m.ce.layers[i].kernel, 1);
    fn("ce.l" + std::to_string(i) + ".bias", m.ce.layers[i].bias, 1);
  }
}

}  // namespace

std::vector<ParamRef> FSLModel::parameters() {
  std::vector<ParamRef> out;
  visit_params(*this, [&](const std::string& name, Tensor& t, int group) {
    out.push_back({name, &t, group});
  });
  return out;
}

std::vector<ParamRef> FSLModel::theta1() {
  std::vector<ParamRef> out;
  for (auto& p : parameters())
    if (p.group == 0) out.push_back(p);
  return out;
}

std::vector<ParamRef> FSLModel::theta2() {
  std::vector<ParamRef> out;
  for (auto& p : parameters())
    if (p.group == 1) out.push_back(p);
  return out;
}

FSLModel FSLModel::bind(Tape& tape) const {
  FSLModel bound = *this;
  visit_params(bound, [&](const std::string&, Tensor& t, int) { t = tape.watch(t); });
  return bound;
}

namespace {

Tensor query_tensor(const Episode& ep) { return Tensor::from_matrix(ep.query.ls); }

Tensor support_tensor(const Episode& ep) {
  std::vector<Eigen::MatrixX2d> ls;
  ls.reserve(ep.support.size());
  for (const auto& b : ep.support) ls.push_back(b.ls);
  return support_stack(ls);
}

Tensor channel_gate(const Tensor& f, const Tensor& gate) {
  return mul_elementwise(f, reshape(gate, {gate.extent(0), 1}));
}

}  // namespace

Tensor cin_forward(const InitNetParams& cin, const Tensor& f_initial) {
  Tensor x = relu(conv2d(f_initial, cin.c0.kernel, cin.c0.bias));
  x = relu(conv2d(x, cin.c1.kernel, cin.c1.bias));  // (1, w, c)
  const int w = x.extent(1), c = x.extent(2);
  Tensor plane = transpose2d(reshape(x, {w, c}));   // (c, w)
  return transpose2d(conv1d(plane, cin.head.kernel, cin.head.bias));  // (w, 2)
}

FslOutput fsl_forward(const FSLModel& model, const Episode& episode,
                      const ForwardOverrides& overrides) {
  const ModelKind kind = model.kind;
  FslOutput out;

  if (kind == ModelKind::BackboneOnly) {
    out.h_est = backbone_only_forward(model.ce, episode.query.ls);
    return out;
  }

  if (kind == ModelKind::BackboneSelfAttention) {
    Tensor in = transpose2d(query_tensor(episode));
    LayerHook hook = [&](const Tensor& f, int i) {
      Tensor pooled = global_average_pool(transpose2d(f));  // (c)
      Tensor a = sigmoid(dense(relu(dense(pooled, model.senet.fc1_w[static_cast<std::size_t>(i)],
                                          model.senet.fc1_b[static_cast<std::size_t>(i)])),
                               model.senet.fc2_w[static_cast<std::size_t>(i)],
                               model.senet.fc2_b[static_cast<std::size_t>(i)]));
      return channel_gate(f, a);
    };
    out.h_est = transpose2d(backbone_forward(model.ce, in, hook));
    return out;
  }

  if (episode.n_support() == 0) {
    // n = 0 baseline path: backbone alone.
    out.h_est = backbone_only_forward(model.ce, episode.query.ls);
    return out;
  }

  Tensor sup = support_tensor(episode);
  Tensor feat = overrides.tam_identity ? Tensor() : tam_features(model.tam, sup);
  LayerHook tam_hook;
  if (!overrides.tam_identity)
    tam_hook = [&](const Tensor& f, int i) {
      return channel_gate(f, tam_head(model.tam, feat, i));
    };

  Tensor backbone_in;
  if (kind == ModelKind::FslNoCam) {
    backbone_in = transpose2d(query_tensor(episode));
  } else {
    std::vector<Tensor> support_blocks;
    support_blocks.reserve(episode.support.size());
    for (const auto& b : episode.support) support_blocks.push_back(Tensor::from_matrix(b.ls));
    Tensor q = query_tensor(episode);
    Tensor f_initial = cam_forward(support_blocks, q, model.extractor, model.cam,
                                   overrides.cam_zero_attention);
    out.s_initial = cin_forward(model.cin, f_initial);
    Tensor in = out.s_initial;
    if (model.cfg.backbone_query_skip) in = concat({in, q}, 1);  // (w, 4)
    backbone_in = transpose2d(in);
  }

  out.h_est = transpose2d(backbone_forward(model.ce, backbone_in, tam_hook));
  return out;
}

Eigen::MatrixX2d estimate_response(const FSLModel& model, const Tensor& h_est) {
  Eigen::MatrixX2d raw(h_est.extent(0), 2);
  raw = Eigen::Map<const RowMat>(h_est.data(), h_est.extent(0), 2);
  if (model.loss_kind == LossKind::Mse) return raw;
  // bce_scaled: invert the sigmoid squashing and the min-max target scaling
  Eigen::ArrayXXd s = 1.0 / (1.0 + (-raw.array()).exp());
  Eigen::Map<const RowMat> lo(model.bce_lo.data(), model.bce_lo.extent(0), 2);
  Eigen::Map<const RowMat> hi(model.bce_hi.data(), model.bce_hi.extent(0), 2);
  return (lo.array() + (hi.array() - lo.array()) * s).matrix();
}

}  // namespace fsce
