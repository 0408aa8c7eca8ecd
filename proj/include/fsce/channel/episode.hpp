#pragma once

#include "fsce/channel/realization.hpp"

#include <cstdint>
#include <vector>

namespace fsce {

enum class BlockKind { Support, Query };

// One OFDM block observation: the LS channel estimates at pilot subcarriers,
// zero elsewhere.
struct PilotBlock {
  int width = 0;
  std::vector<std::uint8_t> pilot_mask;  // length w
  Eigen::MatrixX2d ls;                   // (w, 2), zero at non-pilots
  double snr_db = 0.0;
  BlockKind kind = BlockKind::Query;

  int pilot_count() const;
};

std::vector<std::uint8_t> full_mask(int w);
// every `stride`-th subcarrier starting at index 0
std::vector<std::uint8_t> comb_mask(int w, int stride = kQueryPilotStride);

// Unit-modulus QPSK pilots, per-subcarrier complex Gaussian noise with
// variance 10^(-snr_db/10); ls = Y/X at pilot positions.  snr_db = +inf
// disables noise.
PilotBlock transmit_and_ls(const ChannelRealization& h, const std::vector<std::uint8_t>& mask,
                           double snr_db, std::uint64_t seed);

// One few-shot instance: n support blocks plus one query block drawn from
// the same environment (unless built by the mismatch experiment).
struct Episode {
  std::vector<PilotBlock> support;
  PilotBlock query;
  Eigen::MatrixX2d true_response;  // (w, 2), query realization's H
  int pdp_id = 0;                  // query-side environment
  int support_pdp_id = 0;
  bool mismatched = false;

  int n_support() const { return static_cast<int>(support.size()); }
};

// n+1 independent realizations of `pdp`; support blocks carry all w pilots,
// the query block uses `query_mask`.  The query side consumes an rng stream
// independent of the support side, so episodes built with the same seed
// share their query fields regardless of the support source.
Episode make_episode(const PowerDelayProfile& pdp, int n,
                     const std::vector<std::uint8_t>& query_mask, double snr_db,
                     std::uint64_t seed);

// Support drawn from a different environment ("mismatch").
Episode make_mismatch_episode(const PowerDelayProfile& query_pdp,
                              const PowerDelayProfile& support_pdp, int n, double snr_db,
                              std::uint64_t seed);

// Episode assembly from pre-drawn realizations (dataset-backed path).
Episode assemble_episode(const ChannelRealization& query_h,
                         const std::vector<const ChannelRealization*>& support_h,
                         const std::vector<std::uint8_t>& query_mask, double snr_db,
                         std::uint64_t seed);

}  // namespace fsce
