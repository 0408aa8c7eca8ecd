#include "fsce/eval/baseline.hpp"

#include <stdexcept>

namespace fsce {

Eigen::MatrixX2d ls_interpolation_estimate(const PilotBlock& query) {
  const int w = query.width;
  std::vector<int> pilots;
  for (int k = 0; k < w; ++k)
    if (query.pilot_mask[static_cast<std::size_t>(k)]) pilots.push_back(k);
  if (pilots.empty())
    throw std::invalid_argument("ls_interpolation_estimate: block has no pilots");

  Eigen::MatrixX2d est(w, 2);
  const int np = static_cast<int>(pilots.size());
  if (np == 1) {
    est.rowwise() = query.ls.row(pilots[0]);
    return est;
  }
  for (int seg = 0; seg < np; ++seg) {
    const int a = pilots[static_cast<std::size_t>(seg)];
    const int b_idx = (seg + 1) % np;
    const int b = pilots[static_cast<std::size_t>(b_idx)] + (b_idx == 0 ? w : 0);
    for (int k = a; k < b; ++k) {
      const double t = static_cast<double>(k - a) / static_cast<double>(b - a);
      est.row(k % w) = (1.0 - t) * query.ls.row(a) + t * query.ls.row(b % w);
    }
  }
  return est;
}

double response_mse(const Eigen::MatrixX2d& est, const Eigen::MatrixX2d& truth) {
  if (est.rows() != truth.rows())
    throw std::invalid_argument("response_mse: width mismatch");
  return (est - truth).squaredNorm() / static_cast<double>(est.size());
}

}  // namespace fsce
