#include "fsce/channel/episode.hpp"

#include "fsce/core/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace fsce {

namespace {
constexpr std::uint64_t kQueryStream = 0x715195CE;
constexpr std::uint64_t kSupportStream = 0x5E55104B;
}  // namespace

int PilotBlock::pilot_count() const {
  int n = 0;
  for (auto m : pilot_mask) n += m ? 1 : 0;
  return n;
}

std::vector<std::uint8_t> full_mask(int w) {
  return std::vector<std::uint8_t>(static_cast<std::size_t>(w), 1);
}

std::vector<std::uint8_t> comb_mask(int w, int stride) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(w), 0);
  for (int k = 0; k < w; k += stride) m[static_cast<std::size_t>(k)] = 1;
  return m;
}

PilotBlock transmit_and_ls(const ChannelRealization& h, const std::vector<std::uint8_t>& mask,
                           double snr_db, std::uint64_t seed) {
  const int w = static_cast<int>(mask.size());
  const Eigen::MatrixX2d resp = freq_response(h, w);
  PilotBlock block;
  block.width = w;
  block.pilot_mask = mask;
  block.snr_db = snr_db;
  block.ls = Eigen::MatrixX2d::Zero(w, 2);

  const bool noiseless = std::isinf(snr_db);
  const double noise_std = noiseless ? 0.0 : std::sqrt(std::pow(10.0, -snr_db / 10.0));
  Rng rng(seed);
  for (int k = 0; k < w; ++k) {
    if (!mask[static_cast<std::size_t>(k)]) continue;
    const std::complex<double> hk(resp(k, 0), resp(k, 1));
    if (noiseless) {
      block.ls(k, 0) = hk.real();
      block.ls(k, 1) = hk.imag();
      continue;
    }
    const std::complex<double> x = rng.qpsk_symbol();
    const std::complex<double> y = hk * x + noise_std * rng.complex_normal();
    const std::complex<double> ls = y / x;
    block.ls(k, 0) = ls.real();
    block.ls(k, 1) = ls.imag();
  }
  return block;
}

Episode assemble_episode(const ChannelRealization& query_h,
                         const std::vector<const ChannelRealization*>& support_h,
                         const std::vector<std::uint8_t>& query_mask, double snr_db,
                         std::uint64_t seed) {
  const int w = static_cast<int>(query_mask.size());
  const Rng base(seed);
  const Rng qs = base.split(kQueryStream);
  const Rng ss = base.split(kSupportStream);

  Episode ep;
  ep.pdp_id = query_h.pdp_id;
  ep.support_pdp_id = support_h.empty() ? query_h.pdp_id : support_h.front()->pdp_id;
  ep.query = transmit_and_ls(query_h, query_mask, snr_db, mix_seed(0x4e01, qs.split(2).next_u64()));
  ep.query.kind = BlockKind::Query;
  ep.true_response = freq_response(query_h, w);
  const auto fmask = full_mask(w);
  for (std::size_t i = 0; i < support_h.size(); ++i) {
    PilotBlock b = transmit_and_ls(*support_h[i], fmask, snr_db,
                                   mix_seed(0x4e02, ss.split(2 * i + 2).next_u64()));
    b.kind = BlockKind::Support;
    ep.support.push_back(std::move(b));
  }
  return ep;
}

Episode make_episode(const PowerDelayProfile& pdp, int n,
                     const std::vector<std::uint8_t>& query_mask, double snr_db,
                     std::uint64_t seed) {
  if (n < 0) throw std::invalid_argument("make_episode: n must be >= 0");
  const int w = static_cast<int>(query_mask.size());
  const Rng base(seed);
  const Rng qs = base.split(kQueryStream);
  const Rng ss = base.split(kSupportStream);
  const ChannelRealization query_h = realize_channel(pdp, qs.split(1).next_u64(), w);
  std::vector<ChannelRealization> sup;
  sup.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    sup.push_back(
        realize_channel(pdp, ss.split(2 * static_cast<std::uint64_t>(i) + 1).next_u64(), w));
  std::vector<const ChannelRealization*> sup_ptr;
  sup_ptr.reserve(sup.size());
  for (const auto& h : sup) sup_ptr.push_back(&h);
  return assemble_episode(query_h, sup_ptr, query_mask, snr_db, seed);
}

Episode make_mismatch_episode(const PowerDelayProfile& query_pdp,
                              const PowerDelayProfile& support_pdp, int n, double snr_db,
                              std::uint64_t seed) {
  if (query_pdp.pdp_id == support_pdp.pdp_id)
    throw std::invalid_argument("make_mismatch_episode: identical pdp_ids");
  const Rng base(seed);
  const Rng qs = base.split(kQueryStream);
  const Rng ss = base.split(kSupportStream);
  const ChannelRealization query_h = realize_channel(query_pdp, qs.split(1).next_u64());
  std::vector<ChannelRealization> sup;
  sup.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    sup.push_back(
        realize_channel(support_pdp, ss.split(2 * static_cast<std::uint64_t>(i) + 1).next_u64()));
  std::vector<const ChannelRealization*> sup_ptr;
  sup_ptr.reserve(sup.size());
  for (const auto& h : sup) sup_ptr.push_back(&h);
  Episode ep = assemble_episode(query_h, sup_ptr, comb_mask(kWidth), snr_db, seed);
  ep.mismatched = true;
  ep.support_pdp_id = support_pdp.pdp_id;
  return ep;
}

}  // namespace fsce
