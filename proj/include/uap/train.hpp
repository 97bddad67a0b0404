#pragma once

#include <cstdint>
#include <vector>

#include "uap/adam.hpp"
#include "uap/dataset.hpp"
#include "uap/model.hpp"

namespace uap {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 16;
  AdamConfig adam{.learning_rate = 1e-3};
  std::uint64_t seed = 0;
};

struct TrainHistory {
  std::vector<double> train_accuracy;
  std::vector<double> val_accuracy;  // empty when the dataset has no val split
  std::vector<double> mean_loss;
};

/// Minibatch cross-entropy training with Adam. Frozen layers are never
/// modified. Deterministic for a given seed.
TrainHistory train(VictimModel& model, const SyntheticDataset& data, const TrainConfig& cfg);

double accuracy(const VictimModel& model, const std::vector<AudioSample>& samples);

}  // namespace uap
