#include "zggp/neural/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace zggp {

NetConfig gradcheck_config(Architecture arch, const GameSpec& game) {
  if (arch == Architecture::kAttention) {
    AttentionNetConfig cfg;
    cfg.embed_dim = 16;
    cfg.heads = 2;
    cfg.layers = 2;
    cfg.ff_dim = 32;
    cfg.feature_dim = static_cast<std::uint32_t>(game.feature_dim);
    cfg.max_tiles = static_cast<std::uint32_t>(game.tile_count);
    return cfg;
  }
  ConvNetConfig cfg = conv_preset(Preset::kSmall, game);
  cfg.channels = 12;
  cfg.conv_layers = 3;
  return cfg;
}

namespace {

// Positions from random play, sampled at random depths.
std::vector<TrainingSample> random_samples(const Game& game, int count,
                                           Rng& rng) {
  std::vector<TrainingSample> out;
  std::vector<Move> moves;
  std::uniform_int_distribution<int> target(-1, 1);
  while (static_cast<int>(out.size()) < count) {
    GameState state = game.initial_state();
    const int depth = std::uniform_int_distribution<int>(0, 12)(rng);
    for (int i = 0; i < depth; ++i) {
      moves.clear();
      game.generate_moves(state, moves);
      if (moves.empty()) break;
      state = game.apply_unchecked(
          state,
          moves[std::uniform_int_distribution<std::size_t>(0, moves.size() - 1)(
              rng)]);
    }
    out.push_back({game.encode_tiles(state), static_cast<float>(target(rng))});
  }
  return out;
}

// Batch loss together with the ReLU sign pattern of every sample.
double loss_with_pattern(const BasicValueNet<double>& net,
                         std::span<const TrainingSample> samples,
                         NetWorkspace<double>& ws, std::vector<bool>& pattern) {
  pattern.clear();
  double loss = 0.0;
  for (const TrainingSample& sample : samples) {
    const double err =
        forward(net, sample.encoding.values, sample.encoding.tiles, ws) - sample.target;
    loss += err * err;
    const std::vector<bool> p = ws.relu_pattern();
    pattern.insert(pattern.end(), p.begin(), p.end());
  }
  return loss / static_cast<double>(samples.size());
}

}  // namespace

GradCheckReport gradient_check(const NetConfig& config, const Game& game,
                               std::uint64_t seed,
                               const GradCheckOptions& options) {
  Rng rng(seed);
  BasicValueNet<double> net(config);
  // Fully random parameters (including biases and gains) so no unit sits
  // exactly on a ReLU kink.
  std::uniform_real_distribution<double> weight(-0.5, 0.5);
  const auto& layout = net.params().layout();
  for (std::size_t i = 0; i < layout.count(); ++i) {
    const bool gain = layout[i].name.ends_with(".gain");
    for (double& v : net.params().view(i)) v = (gain ? 1.0 : 0.0) + weight(rng);
  }
  const auto samples = random_samples(game, options.samples, rng);

  NetWorkspace<double> ws(config);
  std::vector<double> grads(net.params().size());
  loss_and_gradients(net, std::span<const TrainingSample>(samples), ws,
                     std::span<double>(grads));

  std::vector<bool> base_pattern, plus_pattern, minus_pattern;
  loss_with_pattern(net, samples, ws, base_pattern);

  GradCheckReport report;
  report.parameters = grads.size();
  auto flat = net.params().data();
  std::size_t spec_index = 0;
  for (std::size_t i = 0; i < flat.size(); ++i) {
    while (i >= layout[spec_index].offset + layout[spec_index].size) {
      ++spec_index;
    }
    const double saved = flat[i];
    flat[i] = saved + options.epsilon;
    const double plus = loss_with_pattern(net, samples, ws, plus_pattern);
    flat[i] = saved - options.epsilon;
    const double minus = loss_with_pattern(net, samples, ws, minus_pattern);
    flat[i] = saved;
    // A central difference across a ReLU kink does not estimate the gradient.
    if (plus_pattern != base_pattern || minus_pattern != base_pattern) {
      ++report.kinks;
      continue;
    }
    const double numeric = (plus - minus) / (2.0 * options.epsilon);
    const double denom =
        std::max({std::abs(grads[i]), std::abs(numeric), options.floor});
    const double rel = std::abs(grads[i] - numeric) / denom;
    if (rel > report.max_relative_error) {
      report.max_relative_error = rel;
      report.worst_parameter = layout[spec_index].name + "[" +
                               std::to_string(i - layout[spec_index].offset) +
                               "]";
      report.worst_analytic = grads[i];
      report.worst_numeric = numeric;
    }
  }
  return report;
}

}  // namespace zggp
