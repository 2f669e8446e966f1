#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hbfp/dataset.hpp"
#include "hbfp/model.hpp"

namespace hbfp {

struct TrainConfig {
  int epochs = 1;
  int64_t batch = 32;
  double lr = 0.01;
  double momentum = 0.0;
  double weight_decay = 0.0;
  uint32_t seed = 1;
  bool stochastic = true;  // rounding for training passes; eval always rounds to nearest
};

struct EpochMetrics {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_metric = 0.0;  // validation accuracy in [0,1]
  double seconds = 0.0;
};

// Minibatch SGD with a deterministic per-epoch shuffle. Quantized parameters
// step through the shell optimizer; FP parameters step directly. Returns one
// metrics row per epoch (empty for zero epochs, weights untouched).
std::vector<EpochMetrics> train_model(Model& model, const Dataset& data, const TrainConfig& cfg);

// Classification accuracy over the given samples, evaluated in minibatches
// with NEAREST_EVEN quantization.
double evaluate_accuracy(Model& model, const Dataset& data, std::span<const int64_t> indices,
                         int64_t batch);

}  // namespace hbfp
