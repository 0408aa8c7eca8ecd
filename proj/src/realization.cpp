#include "fsce/channel/realization.hpp"

#include "fsce/core/rng.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace fsce {

std::vector<double> ChannelRealization::flat_reals() const {
  std::vector<double> out;
  out.reserve(taps.size() * 2);
  for (const auto& t : taps) {
    out.push_back(t.real());
    out.push_back(t.imag());
  }
  return out;
}

ChannelRealization ChannelRealization::from_flat(const double* reals, int l_pad, int pdp_id) {
  ChannelRealization h;
  h.pdp_id = pdp_id;
  h.taps.reserve(static_cast<std::size_t>(l_pad));
  for (int i = 0; i < l_pad; ++i)
    h.taps.emplace_back(reals[2 * i], reals[2 * i + 1]);
  return h;
}

ChannelRealization realize_channel(const PowerDelayProfile& pdp, std::uint64_t seed, int l_pad) {
  ChannelRealization h;
  h.pdp_id = pdp.pdp_id;
  h.taps.assign(static_cast<std::size_t>(l_pad), {0.0, 0.0});
  Rng rng(seed);
  for (std::size_t l = 0; l < pdp.delays.size(); ++l) {
    const int d = pdp.delays[l];
    if (d < 0 || d >= l_pad) throw std::invalid_argument("realize_channel: delay outside padding");
    h.taps[static_cast<std::size_t>(d)] = std::sqrt(pdp.powers[l]) * rng.complex_normal();
  }
  return h;
}

namespace {

// Cached w-point DFT matrix; the evaluation workers may share it read-only.
std::shared_ptr<const Eigen::MatrixXcd> dft_matrix(int w) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const Eigen::MatrixXcd>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(w);
  if (it != cache.end()) return it->second;
  auto m = std::make_shared<Eigen::MatrixXcd>(w, w);
  for (int k = 0; k < w; ++k)
    for (int d = 0; d < w; ++d) {
      const double ang = -2.0 * std::numbers::pi * k * d / w;
      (*m)(k, d) = std::complex<double>(std::cos(ang), std::sin(ang));
    }
  cache.emplace(w, m);
  return m;
}

}  // namespace

Eigen::MatrixX2d freq_response(const ChannelRealization& h, int w) {
  if (w < h.l_pad())
    throw std::invalid_argument("freq_response: w must be >= padded tap count");
  Eigen::VectorXcd taps = Eigen::VectorXcd::Zero(w);
  for (int i = 0; i < h.l_pad(); ++i) taps[i] = h.taps[static_cast<std::size_t>(i)];
  const auto dft = dft_matrix(w);
  Eigen::VectorXcd resp = (*dft) * taps;
  Eigen::MatrixX2d out(w, 2);
  out.col(0) = resp.real();
  out.col(1) = resp.imag();
  return out;
}

std::vector<std::complex<double>> time_taps_from_response(const Eigen::MatrixX2d& resp) {
  const int w = static_cast<int>(resp.rows());
  Eigen::VectorXcd h(w);
  h.real() = resp.col(0);
  h.imag() = resp.col(1);
  Eigen::VectorXcd taps = dft_matrix(w)->adjoint() * h / static_cast<double>(w);
  return {taps.data(), taps.data() + w};
}

}  // namespace fsce
