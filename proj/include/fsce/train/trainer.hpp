#pragma once

#include "fsce/channel/dataset.hpp"
#include "fsce/models/fsl.hpp"
#include "fsce/models/switchnet.hpp"
#include "fsce/train/adam.hpp"

#include <filesystem>

namespace fsce {

enum class OptimizerKind { Adam, Sgd };

struct TrainConfig {
  int batch_size = 128;
  double learning_rate = 1e-3;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  LossKind loss = LossKind::Mse;
  double train_snr_db = 20.0;
  int episodes_per_epoch = 4096;
  int epochs = 5;
  int n_support = 16;
  std::uint64_t seed = 1;
  int threads = 2;

  void validate() const;
  int steps_per_epoch() const { return std::max(1, episodes_per_epoch / batch_size); }
};

struct CurveRow {
  int epoch = 0;
  int step = 0;
  double loss_total = 0, loss_init = 0, loss_ce = 0;
  long wall_ms = 0;
};

void write_curve_csv(const std::filesystem::path& path, const std::vector<CurveRow>& rows);

// Each episode's support and query come from one uniformly drawn PDP of the
// pool, so scenarios interleave within a batch.
std::vector<Episode> sample_batch(const Dataset& ds, const std::vector<int>& pdp_pool,
                                  const TrainConfig& cfg, Rng& rng);

struct StepStats {
  double loss_total = 0, loss_init = 0, loss_ce = 0;
};

// One optimizer step on the summed initialization + estimation losses,
// averaged over the batch.  Per-episode gradients are computed on separate
// tapes (possibly in parallel) and reduced in episode order, so results do
// not depend on the thread count.  Throws on non-finite loss.
StepStats train_step(FSLModel& model, const std::vector<Episode>& batch,
                     const TrainConfig& cfg, AdamState& opt);

struct TrainOutput {
  FSLModel model;
  std::vector<CurveRow> curve;
};

// Episodic end-to-end training; deterministic for a fixed config.
TrainOutput train(ModelKind kind, const Dataset& ds, const std::vector<int>& pdp_pool,
                  const ModelConfig& mcfg, const TrainConfig& tcfg);

struct SwitchNetTrainOutput {
  SwitchNetParams params;
  std::vector<CurveRow> curve;  // epoch column holds the subnet index
};

// Offline recipe: the basic subnet is fitted on scenario 0, then one frozen
// compensator per scenario i = 1..M.  Requires M + 1 <= training scenarios.
SwitchNetTrainOutput switchnet_offline_train(const Dataset& ds, int m, const TrainConfig& tcfg);

// Dataset-level per-coordinate target bounds for the scaled-BCE loss.
void fit_bce_bounds(FSLModel& model, const Dataset& ds, const std::vector<int>& pdp_pool);

}  // namespace fsce
