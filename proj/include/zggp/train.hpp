#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "zggp/datagen.hpp"
#include "zggp/neural/adam.hpp"
#include "zggp/neural/value_net.hpp"

namespace zggp {

struct TrainConfig {
  int epochs = 8;
  int batch_size = 128;
  double lr = 1e-3;
  double validation_fraction = 0.05;
  std::uint64_t shuffle_seed = 0;
  std::uint64_t init_seed = 0;
  Architecture arch = Architecture::kAttention;
  Preset preset = Preset::kSmall;
  // Explicit network config; overrides arch/preset when set.
  std::optional<NetConfig> net;
  // Threads for per-batch gradient shards. Results do not depend on it.
  int workers = 1;
};

struct TrainResult {
  double train_loss = 0.0;
  std::optional<double> val_loss;
  // Mean minibatch loss of each epoch.
  std::vector<double> epoch_losses;
  std::size_t train_samples = 0;
  std::size_t val_samples = 0;
  double seconds = 0.0;
};

// Minibatches are split into this many fixed shards whose gradients are
// reduced in shard order, independent of the worker count.
inline constexpr int kGradientShards = 8;

// The network config the trainer would build for this dataset.
NetConfig resolve_net_config(const TrainConfig& config, const Game& game);

// Trains `net` in place on `samples`; the last floor(validation_fraction * N)
// samples are held out. Throws EmptyDataset / ShapeMismatch.
TrainResult train_on_samples(ValueNet& net, std::span<const TrainingSample> samples,
                             const TrainConfig& config);

// Reads the dataset, trains a fresh network and writes the model file.
// Throws ShapeMismatch, EmptyDataset, IoFailure, CorruptDataset.
TrainResult train_model(const std::string& dataset_path,
                        const TrainConfig& config,
                        const std::string& model_path);

}  // namespace zggp
