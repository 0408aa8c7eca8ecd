#pragma once

#include "fsce/channel/episode.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace fsce {

struct DatasetConfig {
  std::vector<ScenarioSpec> scenarios;
  int pdps_per_scenario = 50;
  int realizations_per_pdp = 200;
  std::uint64_t seed = 1;
  int l_pad = kLPad;
  int width = kWidth;
  // Leading fraction of each scenario's PDPs used for training; the rest are
  // the held-out environments.
  double train_pdp_fraction = 0.9;

  void validate() const;
};

// In-memory view of a generated dataset.  Realization records are loaded
// from the per-scenario binaries; PDPs are re-derived from the manifest's
// specs and seed (generation is a pure function of both).
class Dataset {
 public:
  // Writes manifest.json plus one binary per scenario.  Regeneration with
  // the same config is byte-identical.
  static void generate(const DatasetConfig& cfg, const std::filesystem::path& dir);
  static Dataset load(const std::filesystem::path& dir);

  const DatasetConfig& config() const { return cfg_; }
  int scenario_count() const { return static_cast<int>(cfg_.scenarios.size()); }
  int pdp_count() const { return static_cast<int>(pdps_.size()); }
  const PowerDelayProfile& pdp(int index) const { return pdps_[static_cast<std::size_t>(index)]; }
  int scenario_of_pdp(int index) const { return scenario_idx_[static_cast<std::size_t>(index)]; }
  int realization_count() const { return cfg_.realizations_per_pdp; }
  const ChannelRealization& realization(int pdp_index, int realization_index) const;

  // Global PDP indices (not ids) partitioned by the train fraction.
  std::vector<int> train_pdp_indices() const;
  std::vector<int> heldout_pdp_indices() const;
  std::vector<int> heldout_pdp_indices(int scenario) const;
  int index_of_pdp_id(int pdp_id) const;

  // Episode drawn from stored realizations (distinct indices within the
  // episode, fresh pilots/noise per call).  The query side is independent of
  // n and of the support source.
  Episode episode(int pdp_index, int n, double snr_db, std::uint64_t seed) const;
  Episode mismatch_episode(int query_pdp_index, int support_pdp_index, int n, double snr_db,
                           std::uint64_t seed) const;

  static std::uint64_t pdp_seed(std::uint64_t dataset_seed, int scenario, int pdp);
  static std::uint64_t realization_seed(std::uint64_t dataset_seed, int scenario, int pdp, int r);

 private:
  DatasetConfig cfg_;
  std::vector<PowerDelayProfile> pdps_;        // all scenarios, in order
  std::vector<int> scenario_idx_;              // parallel to pdps_
  std::vector<std::vector<ChannelRealization>> realizations_;  // per pdp index
};

}  // namespace fsce
