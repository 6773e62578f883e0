#include "zggp/mcts.hpp"

#include <algorithm>
#include <cmath>

#include "zggp/error.hpp"

namespace zggp {

SearchTree::SearchTree(const Game& game, GameState root_state)
    : game_(&game), root_state_(root_state) {}

void SearchTree::advance(Move move) {
  GameState next = game_->apply_move(root_state_, move);
  Node new_root;
  for (Node& child : root_.children) {
    if (child.move == move) {
      new_root = std::move(child);
      break;
    }
  }
  new_root.move = move;
  root_ = std::move(new_root);
  root_state_ = next;
}

double uct_score(std::uint32_t parent_visits, const Node& child, double c) {
  if (child.visits == 0) return kUnvisitedScore;
  const double n = child.visits;
  return child.value_sum / n +
         c * std::sqrt(std::log(static_cast<double>(parent_visits)) / n);
}

namespace {

std::size_t select_child(const Node& node, double c) {
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  const double log_n =
      node.visits > 0 ? std::log(static_cast<double>(node.visits)) : 0.0;
  for (std::size_t i = 0; i < node.children.size(); ++i) {
    const Node& child = node.children[i];
    // Unvisited children win immediately; lowest index first.
    if (child.visits == 0) return i;
    const double n = child.visits;
    const double score = child.value_sum / n + c * std::sqrt(log_n / n);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

}  // namespace

void run_search(SearchTree& tree, const SearchConfig& config,
                LeafEvaluator* evaluator) {
  const Game& game = tree.game();
  if (game.is_terminal(tree.root_state())) {
    throw Error(ErrorKind::kNonTerminalRequired,
                "search root is a terminal state");
  }
  const bool wants_net = config.eval_mode == EvalMode::kValueNet;
  if (wants_net != (evaluator != nullptr)) {
    throw Error(ErrorKind::kEvaluatorMissing,
                wants_net ? "value-net search without an evaluator"
                          : "playout search given an evaluator");
  }
  if (config.iterations < 1) {
    throw Error(ErrorKind::kInvalidArgument, "iterations must be >= 1");
  }

  Rng rng(config.rng_seed);
  std::vector<Node*> path;
  // Player to move at the parent of each path node (owner of its values).
  std::vector<Player> owner;
  std::vector<Move> moves;

  for (int it = 0; it < config.iterations; ++it) {
    Node* node = &tree.mutable_root();
    GameState state = tree.root_state();
    path.clear();
    owner.clear();
    path.push_back(node);
    owner.push_back(opponent(state.to_move));

    bool terminal = false;
    while (true) {
      if (game.is_terminal(state)) {
        terminal = true;
        break;
      }
      if (!node->expanded) {
        moves.clear();
        game.generate_moves(state, moves);
        node->children.resize(moves.size());
        for (std::size_t i = 0; i < moves.size(); ++i) {
          node->children[i].move = moves[i];
        }
        node->expanded = true;
      }
      Node& child = node->children[select_child(*node, config.exploration_c)];
      owner.push_back(state.to_move);
      state = game.apply_unchecked(state, child.move);
      node = &child;
      path.push_back(node);
      if (child.visits == 0) {
        terminal = game.is_terminal(state);
        break;
      }
    }

    // Leaf value on the [0, 1] scale for P1.
    double p1_value;
    if (terminal) {
      p1_value = 0.5 * (game.terminal_payoff(state).score_p1 + 1.0);
    } else if (wants_net) {
      const double v = evaluator->evaluate(game, state);
      const double mover_value = 0.5 * (v + 1.0);
      p1_value = state.to_move == Player::kP1 ? mover_value : 1.0 - mover_value;
    } else {
      p1_value = 0.5 * (game.random_playout(state, rng).score_p1 + 1.0);
    }

    ++path.back()->evaluations;
    for (std::size_t i = 0; i < path.size(); ++i) {
      Node* n = path[i];
      ++n->visits;
      n->value_sum += owner[i] == Player::kP1 ? p1_value : 1.0 - p1_value;
    }
  }
}

Move best_move(const SearchTree& tree) {
  const Node& root = tree.root();
  const Node* best = nullptr;
  for (const Node& child : root.children) {
    if (child.visits > 0 && (best == nullptr || child.visits > best->visits)) {
      best = &child;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorKind::kEmptyTree, "root has no visited child");
  }
  return best->move;
}

Move sample_by_visits(const SearchTree& tree, Rng& rng) {
  const Node& root = tree.root();
  std::uint64_t total = 0;
  for (const Node& child : root.children) total += child.visits;
  if (total == 0) {
    throw Error(ErrorKind::kEmptyTree, "root has no visited child");
  }
  std::uniform_int_distribution<std::uint64_t> pick(0, total - 1);
  std::uint64_t r = pick(rng);
  for (const Node& child : root.children) {
    if (r < child.visits) return child.move;
    r -= child.visits;
  }
  return root.children.back().move;
}

bool check_tree_invariants(const Node& node) {
  std::uint64_t child_visits = 0;
  for (const Node& child : node.children) {
    if (!check_tree_invariants(child)) return false;
    child_visits += child.visits;
  }
  if (node.visits != child_visits + node.evaluations) return false;
  if (node.visits > 0) {
    const double q = node.mean();
    if (q < -1e-9 || q > 1.0 + 1e-9) return false;
  }
  return true;
}

}  // namespace zggp
