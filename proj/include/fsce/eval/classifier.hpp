#pragma once

#include "fsce/channel/dataset.hpp"

#include <Eigen/Core>

namespace fsce {

struct ClassifierConfig {
  int conv_channels = 8;
  int kernel = 5;
  int steps = 300;
  int batch_size = 64;
  double learning_rate = 1e-3;
  // per-PDP realization split
  int train_per_pdp = 24;
  int test_per_pdp = 8;
  std::uint64_t seed = 1;
};

struct ClassifierResult {
  double accuracy = 0.0;           // held-out
  Eigen::MatrixXi confusion;       // rows = true scenario, cols = predicted
  int test_samples = 0;
};

// Small conv classifier mapping one stored realization (its re/im taps) to
// its scenario label; verifies that the synthetic scenarios are separable.
ClassifierResult train_separability_classifier(const Dataset& ds, const ClassifierConfig& cfg);

}  // namespace fsce
