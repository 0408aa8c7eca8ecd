#pragma once

#include "fsce/channel/episode.hpp"
#include "fsce/models/params.hpp"

namespace fsce {

// Baseline estimator: a basic affine CE subnet plus M environment-specific
// compensators combined by the online-trainable scalars alpha:
//   h_est = (sum_i alpha_i W_i + alpha_0 I)(W_0 h_ls + b_0) + sum_i alpha_i b_i
struct SwitchNetParams {
  Tensor w0, b0;             // (2w, 2w), (2w)
  std::vector<Tensor> w;     // M x (2w, 2w)
  std::vector<Tensor> b;     // M x (2w)
  Tensor alpha;              // (M+1); only these adapt online
  int width = 0;

  int m() const { return static_cast<int>(w.size()); }
  static SwitchNetParams init(int width, int m, std::uint64_t seed);

  std::vector<ParamRef> subnet_params(int subnet);  // 0 = basic, 1..M = compensators
  SwitchNetParams bind_subnet(Tape& tape, int subnet) const;
  SwitchNetParams bind_alpha(Tape& tape) const;
};

// Exact evaluation of the combination above; differentiable in whatever
// operands are tracked.
Tensor switchnet_forward(const SwitchNetParams& params, const Tensor& h_ls /* (2w) */);

// Flattens the zero-filled masked query LS the same way the backbone sees it.
Tensor switchnet_input(const PilotBlock& query);
Tensor flatten_response(const Eigen::MatrixX2d& resp);

struct SwitchNetAdaptResult {
  Eigen::VectorXd alpha;
  double final_mse = 0.0;
  std::vector<double> mse_per_step;  // training-set MSE before each update
  int trainable_scalars = 0;         // always M+1
};

// Plain gradient descent on alpha over labeled (query LS, truth) pairs taken
// from the episodes; W and b stay frozen.  Updates params.alpha in place.
SwitchNetAdaptResult switchnet_online_adapt(SwitchNetParams& params,
                                            const std::vector<Episode>& support_episodes,
                                            int steps, double lr);

}  // namespace fsce
