#pragma once

// Head-to-head match harness: fixed-iteration agents, side swapping, score
// ratio with a 95% Wald interval.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "zggp/game.hpp"
#include "zggp/mcts.hpp"
#include "zggp/neural/value_net.hpp"

namespace zggp {

class Agent {
 public:
  virtual ~Agent() = default;
  virtual void reset(const Game& game, const GameState& state) = 0;
  virtual Move select_move() = 0;
  // Called for every move played, including the agent's own.
  virtual void observe(Move move) = 0;
  // Root statistics of the last search, if the agent searches.
  virtual const SearchTree* tree() const { return nullptr; }
};

// UCT agent with tree reuse; value-net mode when constructed with a network.
class UctAgent final : public Agent {
 public:
  UctAgent(SearchConfig config, std::uint64_t seed,
           std::shared_ptr<const ValueNet> net = nullptr,
           std::optional<TilePermutation> obfuscation = std::nullopt);
  ~UctAgent() override;

  void reset(const Game& game, const GameState& state) override;
  Move select_move() override;
  void observe(Move move) override;
  const SearchTree* tree() const override { return tree_.get(); }

 private:
  SearchConfig config_;
  Rng rng_;
  std::shared_ptr<const ValueNet> net_;
  std::unique_ptr<LeafEvaluator> evaluator_;
  std::unique_ptr<SearchTree> tree_;
};

class RandomAgent final : public Agent {
 public:
  explicit RandomAgent(std::uint64_t seed) : rng_(seed) {}
  void reset(const Game& game, const GameState& state) override;
  Move select_move() override;
  void observe(Move move) override;

 private:
  Rng rng_;
  const Game* game_ = nullptr;
  GameState state_;
};

enum class AgentKind { kUctPlayout, kUctValue };

struct AgentSpec {
  AgentKind kind = AgentKind::kUctPlayout;
  int iterations = 600;
  double exploration_c = 1.414;
  std::uint64_t seed = 0;
  std::string model_path;  // kUctValue only

  std::string describe() const;
};

struct MatchResult {
  int games = 0;
  int wins = 0;
  int draws = 0;
  int losses = 0;

  // (wins + draws / 2) / games, from agent A's perspective.
  double score() const;
  double ci95() const;
  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

// Wald half-width 1.96 * sqrt(p (1 - p) / n).
double ci95(double p, int n);

// Builds a fresh agent for one game from a derived seed.
using AgentFactory = std::function<std::unique_ptr<Agent>(std::uint64_t)>;

// Per-move hook for tracing: (ply, mover, move, agent that moved).
using MoveObserver =
    std::function<void(const GameState&, Move, const Agent&)>;

// Plays one game to the end; returns the outcome.
Outcome play_game(const Game& game, Agent& first, Agent& second,
                  const MoveObserver& observer = {});

// Mixes the game seed, agent seed and seat (0 moves first) into the seed of
// one agent in one game.
std::uint64_t derive_agent_seed(std::uint64_t game_seed, std::uint64_t agent_seed,
                                int seat);

// Games i and i + n/2 form a mirrored pair sharing the seed base_seed + i:
// A moves first in games 0..n/2-1 and B in the rest. Throws OddGameCount.
MatchResult play_match(const Game& game, const AgentFactory& agent_a,
                       std::uint64_t seed_a, const AgentFactory& agent_b,
                       std::uint64_t seed_b, int n_games,
                       std::uint64_t base_seed, int workers);

// AgentSpec form. Obfuscation applies only to value-net agents. Throws
// OddGameCount, ModelLoadFailure.
MatchResult play_match(const Game& game, const AgentSpec& agent_a,
                       const AgentSpec& agent_b, int n_games,
                       std::uint64_t base_seed,
                       std::optional<std::uint64_t> obfuscation_seed,
                       int workers);

struct ReportEntry {
  std::string label;
  std::string game;
  AgentSpec agent_a;
  AgentSpec agent_b;
  std::optional<std::uint64_t> obfuscation_seed;
  MatchResult result;
};

// "74% ±4.3": percent rounded to an integer, half-width to one decimal.
std::string format_score(const MatchResult& result);
std::string report_text(const std::vector<ReportEntry>& entries);
// One JSON object per line.
std::string report_jsonl(const std::vector<ReportEntry>& entries);

}  // namespace zggp
