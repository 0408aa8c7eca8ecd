#include "fsce/models/switchnet.hpp"

#include <cmath>
#include <stdexcept>

namespace fsce {

SwitchNetParams SwitchNetParams::init(int width, int m, std::uint64_t seed) {
  if (m < 0) throw std::invalid_argument("switchnet: M must be >= 0");
  SwitchNetParams p;
  p.width = width;
  Rng rng(mix_seed(seed, 0x51c4e7));
  const int d = 2 * width;
  p.w0 = init_dense_w(d, d, rng);
  p.b0 = Tensor::zeros({d});
  for (int i = 0; i < m; ++i) {
    p.w.push_back(init_dense_w(d, d, rng));
    p.b.push_back(Tensor::zeros({d}));
  }
  p.alpha = Tensor::zeros({m + 1});
  p.alpha.data()[0] = 1.0;
  return p;
}

std::vector<ParamRef> SwitchNetParams::subnet_params(int subnet) {
  if (subnet < 0 || subnet > m())
    throw std::invalid_argument("switchnet: subnet index out of range");
  if (subnet == 0) return {{"w0", &w0, 1}, {"b0", &b0, 1}};
  return {{"w" + std::to_string(subnet), &w[static_cast<std::size_t>(subnet - 1)], 1},
          {"b" + std::to_string(subnet), &b[static_cast<std::size_t>(subnet - 1)], 1}};
}

SwitchNetParams SwitchNetParams::bind_subnet(Tape& tape, int subnet) const {
  SwitchNetParams bound = *this;
  if (subnet == 0) {
    bound.w0 = tape.watch(bound.w0);
    bound.b0 = tape.watch(bound.b0);
  } else {
    bound.w[static_cast<std::size_t>(subnet - 1)] =
        tape.watch(bound.w[static_cast<std::size_t>(subnet - 1)]);
    bound.b[static_cast<std::size_t>(subnet - 1)] =
        tape.watch(bound.b[static_cast<std::size_t>(subnet - 1)]);
  }
  return bound;
}

SwitchNetParams SwitchNetParams::bind_alpha(Tape& tape) const {
  SwitchNetParams bound = *this;
  bound.alpha = tape.watch(bound.alpha);
  return bound;
}

Tensor switchnet_forward(const SwitchNetParams& params, const Tensor& h_ls) {
  const int d = 2 * params.width;
  if (h_ls.rank() != 1 || h_ls.extent(0) != d)
    throw std::invalid_argument("switchnet_forward: h_ls must have length 2w");
  Tensor u = dense(h_ls, params.w0, params.b0);  // basic subnet output
  std::vector<Tensor> terms;
  terms.reserve(params.w.size() + 1);
  terms.push_back(reshape(u, {1, d}));
  for (std::size_t i = 0; i < params.w.size(); ++i)
    terms.push_back(reshape(dense(u, params.w[i], params.b[i]), {1, d}));
  Tensor stacked = concat(terms, 0);  // (M+1, 2w)
  Tensor combined = matmul(transpose2d(stacked), reshape(params.alpha, {params.m() + 1, 1}));
  return reshape(combined, {d});
}

Tensor switchnet_input(const PilotBlock& query) {
  return flatten_response(query.ls);
}

Tensor flatten_response(const Eigen::MatrixX2d& resp) {
  const int w = static_cast<int>(resp.rows());
  Tensor t({2 * w});
  for (int k = 0; k < w; ++k) {
    t.data()[2 * k] = resp(k, 0);
    t.data()[2 * k + 1] = resp(k, 1);
  }
  return t;
}

SwitchNetAdaptResult switchnet_online_adapt(SwitchNetParams& params,
                                            const std::vector<Episode>& support_episodes,
                                            int steps, double lr) {
  if (support_episodes.empty())
    throw std::invalid_argument("switchnet_online_adapt: empty support set");
  std::vector<Tensor> inputs, targets;
  inputs.reserve(support_episodes.size());
  targets.reserve(support_episodes.size());
  for (const auto& ep : support_episodes) {
    inputs.push_back(switchnet_input(ep.query));
    targets.push_back(flatten_response(ep.true_response));
  }

  SwitchNetAdaptResult result;
  result.trainable_scalars = params.m() + 1;
  for (int s = 0; s < steps; ++s) {
    Tape tape;
    SwitchNetParams bound = params.bind_alpha(tape);
    Tensor loss;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      Tensor l = mse_loss(switchnet_forward(bound, inputs[i]), targets[i]);
      loss = i == 0 ? l : add(loss, l);
    }
    loss = scale(loss, 1.0 / static_cast<double>(inputs.size()));
    result.mse_per_step.push_back(loss.item());
    tape.backward(loss);
    auto g = tape.grad(bound.alpha);
    for (std::int64_t i = 0; i < params.alpha.size(); ++i)
      params.alpha.data()[i] -= lr * g[i];
  }

  // final training-set MSE with the adapted alpha
  double final_mse = 0.0;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor est = switchnet_forward(params, inputs[i]);
    final_mse += (est.flat() - targets[i].flat()).square().mean();
  }
  result.final_mse = final_mse / static_cast<double>(inputs.size());
  result.alpha = Eigen::Map<const Eigen::VectorXd>(params.alpha.data(), params.alpha.size());
  return result;
}

}  // namespace fsce
