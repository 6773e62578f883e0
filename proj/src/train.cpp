#include "zggp/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include "zggp/error.hpp"
#include "zggp/neural/model_io.hpp"

namespace zggp {

NetConfig resolve_net_config(const TrainConfig& config, const Game& game) {
  if (config.net) return *config.net;
  return make_net_config(config.arch, config.preset, game.spec());
}

namespace {

void check_shapes(const NetConfig& net, std::span<const TrainingSample> samples) {
  const int features = input_features(net);
  const int tiles = input_tiles(net);
  for (const auto& s : samples) {
    if (s.encoding.features != features || s.encoding.tiles > tiles ||
        (architecture_of(net) == Architecture::kConv &&
         s.encoding.tiles != tiles)) {
      throw Error(ErrorKind::kShapeMismatch,
                  "dataset samples are " + std::to_string(s.encoding.tiles) +
                      " x " + std::to_string(s.encoding.features) +
                      ", network expects " + std::to_string(tiles) + " x " +
                      std::to_string(features));
    }
  }
}

class ShardedGradient {
 public:
  ShardedGradient(const ValueNet& net, int workers)
      : workers_(std::clamp(workers, 1, kGradientShards)),
        total_(net.params().size()) {
    for (int s = 0; s < kGradientShards; ++s) {
      workspaces_.emplace_back(net.config());
      grads_.emplace_back(total_, 0.0f);
    }
    losses_.resize(kGradientShards);
    sizes_.resize(kGradientShards);
  }

  // Mean loss over the batch; `out` receives the mean gradient.
  double compute(const ValueNet& net, std::span<const TrainingSample> batch,
                 std::vector<float>& out) {
    const std::size_t n = batch.size();
    const std::size_t per = (n + kGradientShards - 1) / kGradientShards;
    for (int s = 0; s < kGradientShards; ++s) {
      const std::size_t begin = std::min(n, s * per);
      sizes_[s] = std::min(n, begin + per) - begin;
    }
    auto run = [&](int s) {
      const std::size_t begin = std::min(n, s * per);
      if (sizes_[s] == 0) return;
      losses_[s] = loss_and_gradients(net, batch.subspan(begin, sizes_[s]),
                                      workspaces_[s],
                                      std::span<float>(grads_[s]));
    };
    if (workers_ == 1) {
      for (int s = 0; s < kGradientShards; ++s) run(s);
    } else {
      std::vector<std::thread> threads;
      for (int w = 0; w < workers_; ++w) {
        threads.emplace_back([&, w] {
          for (int s = w; s < kGradientShards; s += workers_) run(s);
        });
      }
      for (auto& t : threads) t.join();
    }
    out.assign(total_, 0.0f);
    double loss = 0.0;
    for (int s = 0; s < kGradientShards; ++s) {
      if (sizes_[s] == 0) continue;
      const float weight = static_cast<float>(sizes_[s]) / static_cast<float>(n);
      for (std::size_t i = 0; i < total_; ++i) out[i] += weight * grads_[s][i];
      loss += losses_[s] * static_cast<double>(sizes_[s]);
    }
    return loss / static_cast<double>(n);
  }

 private:
  int workers_;
  std::size_t total_;
  std::vector<NetWorkspace<float>> workspaces_;
  std::vector<std::vector<float>> grads_;
  std::vector<double> losses_;
  std::vector<std::size_t> sizes_;
};

double mean_loss(const ValueNet& net, std::span<const TrainingSample> samples) {
  NetWorkspace<float> ws(net.config());
  return batch_loss(net, samples, ws);
}

}  // namespace

TrainResult train_on_samples(ValueNet& net,
                             std::span<const TrainingSample> samples,
                             const TrainConfig& config) {
  if (samples.empty()) throw Error(ErrorKind::kEmptyDataset, "no samples");
  if (config.epochs < 1 || config.batch_size < 1) {
    throw Error(ErrorKind::kInvalidArgument, "epochs and batch_size must be >= 1");
  }
  if (config.validation_fraction < 0.0 || config.validation_fraction > 0.5) {
    throw Error(ErrorKind::kInvalidArgument,
                "validation_fraction must lie in [0, 0.5]");
  }
  check_shapes(net.config(), samples);
  const auto start = std::chrono::steady_clock::now();

  const std::size_t n = samples.size();
  const auto n_val = static_cast<std::size_t>(
      std::floor(config.validation_fraction * static_cast<double>(n)));
  const std::size_t n_train = n - n_val;
  if (n_train == 0) throw Error(ErrorKind::kEmptyDataset, "no training samples");
  const auto train_split = samples.first(n_train);

  AdamOptions adam;
  adam.lr = config.lr;
  AdamState<float> state(net.params().size(), adam);
  ShardedGradient gradient(net, config.workers);
  std::vector<float> grads;
  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
  std::vector<TrainingSample> batch;
  Rng rng(config.shuffle_seed);

  TrainResult result;
  result.train_samples = n_train;
  result.val_samples = n_val;
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t first = 0; first < n_train; first += batch_size) {
      const std::size_t last = std::min(n_train, first + batch_size);
      batch.clear();
      for (std::size_t i = first; i < last; ++i) {
        batch.push_back(train_split[order[i]]);
      }
      const double loss = gradient.compute(net, batch, grads);
      epoch_loss += loss * static_cast<double>(last - first);
      adam_step(net.params().data(), std::span<const float>(grads), state);
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n_train));
  }

  result.train_loss = mean_loss(net, train_split);
  if (n_val > 0) result.val_loss = mean_loss(net, samples.subspan(n_train));
  result.seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return result;
}

TrainResult train_model(const std::string& dataset_path,
                        const TrainConfig& config,
                        const std::string& model_path) {
  const Dataset dataset = read_dataset(dataset_path);
  if (dataset.samples.empty()) {
    throw Error(ErrorKind::kEmptyDataset, dataset_path + " has no samples");
  }
  const auto game = make_game(dataset.header.game_id);
  if (static_cast<std::uint32_t>(game->tile_count()) != dataset.header.tiles ||
      static_cast<std::uint32_t>(game->spec().feature_dim) !=
          dataset.header.features) {
    throw Error(ErrorKind::kShapeMismatch,
                "dataset shape disagrees with game " + dataset.header.game_id);
  }
  const NetConfig net_config = resolve_net_config(config, *game);
  if (input_features(net_config) != static_cast<int>(dataset.header.features) ||
      input_tiles(net_config) < static_cast<int>(dataset.header.tiles) ||
      (architecture_of(net_config) == Architecture::kConv &&
       input_tiles(net_config) != static_cast<int>(dataset.header.tiles))) {
    throw Error(ErrorKind::kShapeMismatch,
                "network config does not fit dataset " + dataset_path);
  }
  ValueNet net = init_value_net(net_config, config.init_seed);
  TrainResult result = train_on_samples(net, dataset.samples, config);
  save_model(net, model_path);
  return result;
}

}  // namespace zggp
