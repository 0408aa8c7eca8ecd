#pragma once

#include "fsce/eval/classifier.hpp"
#include "fsce/eval/report.hpp"
#include "fsce/models/checkpoint.hpp"
#include "fsce/train/trainer.hpp"

namespace fsce {

// Exit codes shared by the library runners and the CLI.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitAssertion = 2,
  kExitIo = 3,
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CheckpointRef {
  std::string model;  // label, usually the model kind
  std::string path;
  int n_support = -1;  // used by sweep-support to match grid entries
};

struct ExperimentConfig {
  std::vector<CheckpointRef> checkpoints;
  std::vector<double> snr_grid_db{5, 10, 15, 20, 25};
  std::vector<int> n_support_grid{0, 1, 2, 4, 8, 16, 32};
  int eval_samples = 500;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "out";
  int eval_pdps_per_scenario = 2;
  int threads = 2;
  bool assert_trends = false;
  double sweep_snr_db = 20.0;
  double mismatch_assert_snr_db = 20.0;
  int switchnet_m = 2;
  int switchnet_adapt_steps = 200;
  double switchnet_adapt_lr = 0.3;
  int boundary_pdps_per_scenario = 1;
  ClassifierConfig classifier;

  void validate() const;
};

struct AppConfig {
  std::string dataset_dir = "data";
  DatasetConfig dataset;
  ModelConfig model;
  TrainConfig train;
  std::string train_model_kind = "fsl_full";
  ExperimentConfig eval;
};

// The built-in desk-scale protocol: three separable synthetic scenarios,
// 50 PDPs each with a 45/5 train/held-out split, 200 stored realizations.
AppConfig desk_default_config();

// --- evaluation primitives -----------------------------------------------

double eval_episode_mse(const FSLModel& model, const Episode& ep);
// Mean episode MSE over `samples` episodes of one (pdp, snr, seed) point.
double eval_point(const FSLModel& model, const Dataset& ds, int pdp_index, int n,
                  double snr_db, std::uint64_t seed, int samples);
std::uint64_t eval_episode_seed(std::uint64_t seed, int pdp_id, int sample);

// --- command runners -------------------------------------------------------

int cmd_generate(const AppConfig& cfg, bool dry_run = false);
int cmd_train(const AppConfig& cfg);
int cmd_eval_snr(const AppConfig& cfg);
int cmd_sweep_support(const AppConfig& cfg);
int cmd_mismatch(const AppConfig& cfg);
int cmd_separability(const AppConfig& cfg);
int cmd_boundary(const AppConfig& cfg);
int cmd_switchnet(const AppConfig& cfg);

// Path helpers shared with the tests and the acceptance suite.
std::filesystem::path checkpoint_path(const AppConfig& cfg, const std::string& kind,
                                      std::uint64_t seed, int n_support);

}  // namespace fsce
