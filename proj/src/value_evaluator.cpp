#include "zggp/value_evaluator.hpp"

#include "zggp/error.hpp"

namespace zggp {

ValueNetEvaluator::ValueNetEvaluator(const ValueNet& net,
                                     std::optional<TilePermutation> obfuscation)
    : net_(&net),
      obfuscation_(std::move(obfuscation)),
      workspace_(net.config()) {}

double ValueNetEvaluator::evaluate(const Game& game, const GameState& state) {
  const GameSpec& spec = game.spec();
  if (spec.feature_dim != input_features(net_->config())) {
    throw Error(ErrorKind::kShapeMismatch,
                "network feature dimension does not match " + spec.name);
  }
  encoding_.resize(static_cast<std::size_t>(spec.tile_count) * spec.feature_dim);
  game.encode_tiles_into(state, obfuscation_ ? &*obfuscation_ : nullptr,
                         encoding_);
  ++evaluations_;
  return forward(*net_, std::span<const float>(encoding_), spec.tile_count,
                 workspace_);
}

}  // namespace zggp
