#pragma once

// Value networks over per-tile encodings: a self-attention encoder and a
// 3x3 convolutional baseline. Both map a T x F tile matrix to a scalar in
// (-1, 1) for the player to move. Reverse-mode gradients are hand-written
// for these two fixed graphs.

#include <cstdint>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "zggp/game.hpp"
#include "zggp/neural/tensor.hpp"

namespace zggp {

enum class Architecture : std::uint8_t { kAttention = 0, kConv = 1 };
enum class PositionalMode : std::uint32_t { kSinusoidal = 0, kLearned = 1 };

struct AttentionNetConfig {
  std::uint32_t embed_dim = 64;
  std::uint32_t heads = 4;
  std::uint32_t layers = 3;
  std::uint32_t ff_dim = 128;
  PositionalMode positional = PositionalMode::kSinusoidal;
  std::uint32_t feature_dim = 4;
  std::uint32_t max_tiles = 0;

  friend bool operator==(const AttentionNetConfig&,
                         const AttentionNetConfig&) = default;
};

struct ConvNetConfig {
  std::uint32_t channels = 32;
  std::uint32_t conv_layers = 4;
  std::uint32_t kernel = 3;
  std::uint32_t grid_height = 0;
  std::uint32_t grid_width = 0;
  std::uint32_t feature_dim = 4;

  friend bool operator==(const ConvNetConfig&, const ConvNetConfig&) = default;
};

using NetConfig = std::variant<AttentionNetConfig, ConvNetConfig>;

enum class Preset { kSmall, kDefault };

// Preset sizes: default d=64 h=4 L=3 ff=128 / 32 channels x 4 layers;
// small d=32 h=2 L=2 ff=64 / 16 channels x 3 layers.
AttentionNetConfig attention_preset(Preset preset, const GameSpec& game);
// Throws NoGridTopology when the game has no grid.
ConvNetConfig conv_preset(Preset preset, const GameSpec& game);
NetConfig make_net_config(Architecture arch, Preset preset,
                          const GameSpec& game);

Architecture architecture_of(const NetConfig& config);
// Throws ShapeMismatch / InvalidArgument on inconsistent fields.
void validate(const NetConfig& config);
ParamLayout make_layout(const NetConfig& config);
int input_tiles(const NetConfig& config);
int input_features(const NetConfig& config);

template <typename S>
class BasicValueNet {
 public:
  // All parameters zero.
  explicit BasicValueNet(NetConfig config);
  BasicValueNet(NetConfig config, ParamSet<S> params);

  const NetConfig& config() const { return config_; }
  Architecture architecture() const { return architecture_of(config_); }
  ParamSet<S>& params() { return params_; }
  const ParamSet<S>& params() const { return params_; }

  template <typename T>
  BasicValueNet<T> cast() const {
    return BasicValueNet<T>(config_, params_.template cast<T>());
  }

 private:
  NetConfig config_;
  ParamSet<S> params_;
};

using ValueNet = BasicValueNet<float>;

// Affine weights ~ U(+-sqrt(6/(fan_in+fan_out))), biases 0, LayerNorm gain 1.
ValueNet init_value_net(const NetConfig& config, std::uint64_t seed);

// sin/cos table: (pos, 2i) = sin(pos / 10000^(2i/d)), (pos, 2i+1) = cos(...).
// Throws OddDimension for odd d.
template <typename S>
Tensor<S> sinusoidal_positions(int tiles, int dim);

// Scratch buffers for one forward/backward pass. Not shareable between
// threads; the network itself is read-only during forward.
template <typename S>
class NetWorkspace {
 public:
  explicit NetWorkspace(const NetConfig& config);
  ~NetWorkspace();
  NetWorkspace(NetWorkspace&&) noexcept;
  NetWorkspace& operator=(NetWorkspace&&) noexcept;

  struct Impl;
  Impl& impl() { return *impl_; }

  // Attention probabilities of the last forward pass, [layer][head] each
  // T x T row-major. Empty for the conv architecture.
  std::vector<std::vector<S>> attention_weights() const;
  // Final conv activations (H*W x C, after ReLU) of the last forward pass.
  std::vector<S> conv_feature_map() const;
  // Sign of every ReLU input of the last forward pass (true when positive).
  std::vector<bool> relu_pattern() const;

 private:
  std::unique_ptr<Impl> impl_;
};

// Row-major T x F input. `slots` (optional) gives the positional index used
// for each row; identity when empty.
template <typename S>
S forward(const BasicValueNet<S>& net, std::span<const float> encoding,
          int tiles, NetWorkspace<S>& ws, std::span<const int> slots = {});

// Accumulates d(scale * output)/d(params) for the last forward pass into
// grads (same layout as the net's parameters).
template <typename S>
void backward(const BasicValueNet<S>& net, NetWorkspace<S>& ws, S scale,
              std::span<S> grads);

// Convenience entry points; each throws ShapeMismatch (or NoGridTopology)
// when the encoding does not fit the architecture.
double attention_value_forward(const ValueNet& net, const TileEncoding& enc);
double conv_value_forward(const ValueNet& net, const TileEncoding& enc);
double value_forward(const ValueNet& net, const TileEncoding& enc);

struct TrainingSample {
  TileEncoding encoding;
  float target = 0.0f;

  friend bool operator==(const TrainingSample&, const TrainingSample&) = default;
};

// Mean squared error over the batch; gradients are written (not
// accumulated) into `grads`. Throws EmptyBatch.
template <typename S>
double loss_and_gradients(const BasicValueNet<S>& net,
                          std::span<const TrainingSample> batch,
                          NetWorkspace<S>& ws, std::span<S> grads);

template <typename S>
double batch_loss(const BasicValueNet<S>& net,
                  std::span<const TrainingSample> batch, NetWorkspace<S>& ws);

}  // namespace zggp
