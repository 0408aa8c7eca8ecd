#pragma once

#include "fsce/models/params.hpp"

namespace fsce {

struct AdamState {
  std::vector<Eigen::ArrayXd> m, v;
  long step = 0;

  void ensure(const std::vector<ParamRef>& params);
};

// Bias-corrected Adam update over a named parameter list; grads are aligned
// with `params`.
void adam_step(const std::vector<ParamRef>& params, const std::vector<Eigen::ArrayXd>& grads,
               AdamState& state, double lr, double beta1 = 0.9, double beta2 = 0.999,
               double eps = 1e-8);

void sgd_step(const std::vector<ParamRef>& params, const std::vector<Eigen::ArrayXd>& grads,
              double lr);

}  // namespace fsce
