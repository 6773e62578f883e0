#pragma once

// UCT Monte Carlo tree search with subtree reuse. Leaves are scored either
// by a uniformly random playout or by a value network; there is no policy
// prior anywhere in the search.

#include <cstdint>
#include <limits>
#include <vector>

#include "zggp/game.hpp"

namespace zggp {

// Statistics for one edge/node. value_sum is on the [0, 1] scale from the
// perspective of the player who made the move into this node.
struct Node {
  Move move{};
  std::uint32_t visits = 0;
  // Leaf evaluations performed at this node (1 for an expanded interior
  // node, every visit for a terminal node, 0 for a fresh root).
  std::uint32_t evaluations = 0;
  double value_sum = 0.0;
  bool expanded = false;
  std::vector<Node> children;

  double mean() const { return visits == 0 ? 0.0 : value_sum / visits; }
};

enum class EvalMode { kPlayout, kValueNet };

struct SearchConfig {
  int iterations = 600;
  double exploration_c = 1.414;
  EvalMode eval_mode = EvalMode::kPlayout;
  std::uint64_t rng_seed = 0;
};

// Scores positions for the player to move, in (-1, 1).
class LeafEvaluator {
 public:
  virtual ~LeafEvaluator() = default;
  virtual double evaluate(const Game& game, const GameState& state) = 0;
};

class SearchTree {
 public:
  SearchTree(const Game& game, GameState root_state);

  const Game& game() const { return *game_; }
  const GameState& root_state() const { return root_state_; }
  const Node& root() const { return root_; }
  Node& mutable_root() { return root_; }

  // Re-roots at the child reached by `move`, keeping its statistics, or at a
  // fresh node if that child was never visited. Throws IllegalMove.
  void advance(Move move);

 private:
  const Game* game_;
  GameState root_state_;
  Node root_;
};

inline constexpr double kUnvisitedScore = std::numeric_limits<double>::infinity();

// Q + c * sqrt(ln N / n), or +inf for an unvisited child.
double uct_score(std::uint32_t parent_visits, const Node& child, double c);

// Runs exactly config.iterations select/expand/evaluate/backpropagate
// cycles. Throws NonTerminalRequired on a terminal root and EvaluatorMissing
// when value-net mode has no evaluator (or playout mode is given one).
void run_search(SearchTree& tree, const SearchConfig& config,
                LeafEvaluator* evaluator = nullptr);

// Robust child: most visits, ties to the lowest index. Throws EmptyTree.
Move best_move(const SearchTree& tree);

// Samples a root child with probability proportional to its visits.
Move sample_by_visits(const SearchTree& tree, Rng& rng);

// Free-function form of SearchTree::advance.
inline void advance_root(SearchTree& tree, Move move) { tree.advance(move); }

// Checks n = sum(children n) + evaluations and Q in [0, 1] for every node.
bool check_tree_invariants(const Node& node);

}  // namespace zggp
