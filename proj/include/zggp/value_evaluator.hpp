#pragma once

#include <optional>
#include <vector>

#include "zggp/mcts.hpp"
#include "zggp/neural/value_net.hpp"

namespace zggp {

// Leaf evaluator backed by a value network. Holds private scratch, so each
// search worker needs its own instance; the network is shared read-only.
class ValueNetEvaluator final : public LeafEvaluator {
 public:
  ValueNetEvaluator(const ValueNet& net,
                    std::optional<TilePermutation> obfuscation = std::nullopt);

  double evaluate(const Game& game, const GameState& state) override;

  std::uint64_t evaluations() const { return evaluations_; }

 private:
  const ValueNet* net_;
  std::optional<TilePermutation> obfuscation_;
  NetWorkspace<float> workspace_;
  std::vector<float> encoding_;
  std::uint64_t evaluations_ = 0;
};

// Returns v = 0 for every position.
class ConstantEvaluator final : public LeafEvaluator {
 public:
  explicit ConstantEvaluator(double value = 0.0) : value_(value) {}
  double evaluate(const Game&, const GameState&) override { return value_; }

 private:
  double value_;
};

}  // namespace zggp
