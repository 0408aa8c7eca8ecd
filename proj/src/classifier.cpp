#include "fsce/eval/classifier.hpp"

#include "fsce/models/params.hpp"
#include "fsce/train/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace fsce {

namespace {

struct ClassifierNet {
  Conv1dParams c0, c1;
  Tensor fc_w, fc_b;

  std::vector<ParamRef> parameters() {
    return {{"c0.kernel", &c0.kernel, 1}, {"c0.bias", &c0.bias, 1},
            {"c1.kernel", &c1.kernel, 1}, {"c1.bias", &c1.bias, 1},
            {"fc.w", &fc_w, 1},           {"fc.b", &fc_b, 1}};
  }

  ClassifierNet bind(Tape& tape) const {
    ClassifierNet b = *this;
    for (auto& p : b.parameters()) *p.tensor = tape.watch(*p.tensor);
    return b;
  }
};

Tensor realization_input(const ChannelRealization& h) {
  const int l = h.l_pad();
  Tensor t({2, l});
  for (int i = 0; i < l; ++i) {
    t.data()[i] = h.taps[static_cast<std::size_t>(i)].real();
    t.data()[l + i] = h.taps[static_cast<std::size_t>(i)].imag();
  }
  return t;
}

Tensor classifier_forward(const ClassifierNet& net, const Tensor& input) {
  Tensor x = relu(conv1d(input, net.c0.kernel, net.c0.bias));
  x = relu(conv1d(x, net.c1.kernel, net.c1.bias));
  Tensor pooled = global_average_pool(transpose2d(x));  // (channels)
  return sigmoid(dense(pooled, net.fc_w, net.fc_b));    // per-class score
}

}  // namespace

ClassifierResult train_separability_classifier(const Dataset& ds, const ClassifierConfig& cfg) {
  const int s_count = ds.scenario_count();
  if (s_count < 2)
    throw std::invalid_argument("separability: need at least two scenarios");
  if (cfg.train_per_pdp + cfg.test_per_pdp > ds.realization_count())
    throw std::invalid_argument("separability: split exceeds stored realizations per PDP");

  struct Sample {
    int pdp;
    int realization;
    int label;
  };
  std::vector<Sample> train, test;
  for (int p = 0; p < ds.pdp_count(); ++p) {
    const int label = ds.scenario_of_pdp(p);
    for (int r = 0; r < cfg.train_per_pdp; ++r) train.push_back({p, r, label});
    for (int r = 0; r < cfg.test_per_pdp; ++r)
      test.push_back({p, cfg.train_per_pdp + r, label});
  }

  Rng rng(mix_seed(cfg.seed, 0xC1A55));
  ClassifierNet net;
  net.c0 = init_conv1d(cfg.conv_channels, 2, cfg.kernel, rng);
  net.c1 = init_conv1d(cfg.conv_channels, cfg.conv_channels, cfg.kernel, rng);
  net.fc_w = init_dense_w(s_count, cfg.conv_channels, rng);
  net.fc_b = Tensor::zeros({s_count});

  AdamState opt;
  for (int step = 0; step < cfg.steps; ++step) {
    Tape tape;
    ClassifierNet bound = net.bind(tape);
    Tensor loss;
    for (int i = 0; i < cfg.batch_size; ++i) {
      const Sample& s = train[static_cast<std::size_t>(
          rng.uniform_int(0, static_cast<int>(train.size()) - 1))];
      Tensor scores = classifier_forward(bound, realization_input(ds.realization(s.pdp, s.realization)));
      Tensor onehot = Tensor::zeros({s_count});
      onehot.data()[s.label] = 1.0;
      Tensor l = bce_loss(scores, onehot);
      loss = i == 0 ? l : add(loss, l);
    }
    loss = scale(loss, 1.0 / cfg.batch_size);
    if (!std::isfinite(loss.item()))
      throw std::runtime_error("separability: non-finite training loss");
    tape.backward(loss);
    auto bp = bound.parameters();
    auto pp = net.parameters();
    std::vector<Eigen::ArrayXd> grads;
    grads.reserve(bp.size());
    for (auto& p : bp) grads.push_back(tape.grad(*p.tensor));
    adam_step(pp, grads, opt, cfg.learning_rate);
  }

  ClassifierResult result;
  result.confusion = Eigen::MatrixXi::Zero(s_count, s_count);
  int correct = 0;
  for (const Sample& s : test) {
    Tensor scores = classifier_forward(net, realization_input(ds.realization(s.pdp, s.realization)));
    int best = 0;
    for (int c = 1; c < s_count; ++c)
      if (scores.data()[c] > scores.data()[best]) best = c;
    result.confusion(s.label, best) += 1;
    correct += best == s.label ? 1 : 0;
  }
  result.test_samples = static_cast<int>(test.size());
  result.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
  return result;
}

}  // namespace fsce
