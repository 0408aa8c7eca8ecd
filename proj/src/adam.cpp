#include "fsce/train/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace fsce {

void AdamState::ensure(const std::vector<ParamRef>& params) {
  if (!m.empty()) {
    if (m.size() != params.size())
      throw std::invalid_argument("adam: state does not match parameter list");
    return;
  }
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.push_back(Eigen::ArrayXd::Zero(p.tensor->size()));
    v.push_back(Eigen::ArrayXd::Zero(p.tensor->size()));
  }
}

void adam_step(const std::vector<ParamRef>& params, const std::vector<Eigen::ArrayXd>& grads,
               AdamState& state, double lr, double beta1, double beta2, double eps) {
  if (params.size() != grads.size())
    throw std::invalid_argument("adam: gradient list does not match parameter list");
  state.ensure(params);
  state.step += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = *params[i].tensor;
    const Eigen::ArrayXd& g = grads[i];
    if (g.size() != t.size())
      throw std::invalid_argument("adam: gradient shape mismatch for " + params[i].name);
    auto& m = state.m[i];
    auto& v = state.v[i];
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.square();
    t.flat() -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
  }
}

void sgd_step(const std::vector<ParamRef>& params, const std::vector<Eigen::ArrayXd>& grads,
              double lr) {
  if (params.size() != grads.size())
    throw std::invalid_argument("sgd: gradient list does not match parameter list");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& t = *params[i].tensor;
    if (grads[i].size() != t.size())
      throw std::invalid_argument("sgd: gradient shape mismatch for " + params[i].name);
    t.flat() -= lr * grads[i];
  }
}

}  // namespace fsce
