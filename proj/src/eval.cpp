#include "zggp/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <iomanip>
#include <random>
#include <sstream>

#include <json.hpp>

#include "zggp/datagen.hpp"
#include "zggp/error.hpp"
#include "zggp/neural/model_io.hpp"
#include "zggp/value_evaluator.hpp"
#include "zggp/worker_pool.hpp"

namespace zggp {

UctAgent::UctAgent(SearchConfig config, std::uint64_t seed,
                   std::shared_ptr<const ValueNet> net,
                   std::optional<TilePermutation> obfuscation)
    : config_(config), rng_(seed), net_(std::move(net)) {
  if (net_) {
    config_.eval_mode = EvalMode::kValueNet;
    evaluator_ = std::make_unique<ValueNetEvaluator>(*net_, std::move(obfuscation));
  } else {
    config_.eval_mode = EvalMode::kPlayout;
  }
}

UctAgent::~UctAgent() = default;

void UctAgent::reset(const Game& game, const GameState& state) {
  tree_ = std::make_unique<SearchTree>(game, state);
}

Move UctAgent::select_move() {
  SearchConfig cfg = config_;
  cfg.rng_seed = rng_();
  run_search(*tree_, cfg, evaluator_.get());
  return best_move(*tree_);
}

void UctAgent::observe(Move move) { tree_->advance(move); }

void RandomAgent::reset(const Game& game, const GameState& state) {
  game_ = &game;
  state_ = state;
}

Move RandomAgent::select_move() {
  const auto moves = game_->legal_moves(state_);
  std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
  return moves[pick(rng_)];
}

void RandomAgent::observe(Move move) {
  state_ = game_->apply_unchecked(state_, move);
}

std::string AgentSpec::describe() const {
  std::ostringstream os;
  os << (kind == AgentKind::kUctPlayout ? "uct" : "uct-value") << "("
     << iterations;
  if (kind == AgentKind::kUctValue) os << ", " << model_path;
  os << ")";
  return os.str();
}

double MatchResult::score() const {
  if (games == 0) return 0.0;
  return (wins + 0.5 * draws) / static_cast<double>(games);
}

double MatchResult::ci95() const { return zggp::ci95(score(), games); }

double ci95(double p, int n) {
  if (n < 1) throw Error(ErrorKind::kInvalidArgument, "ci95 needs n >= 1");
  return 1.96 * std::sqrt(p * (1.0 - p) / static_cast<double>(n));
}

Outcome play_game(const Game& game, Agent& first, Agent& second,
                  const MoveObserver& observer) {
  GameState state = game.initial_state();
  first.reset(game, state);
  second.reset(game, state);
  while (!game.is_terminal(state)) {
    Agent& mover = state.to_move == Player::kP1 ? first : second;
    const Move move = mover.select_move();
    if (observer) observer(state, move, mover);
    state = game.apply_move(state, move);
    first.observe(move);
    second.observe(move);
  }
  return game.terminal_payoff(state);
}

std::uint64_t derive_agent_seed(std::uint64_t game_seed, std::uint64_t agent_seed,
                                int seat) {
  std::seed_seq seq{static_cast<std::uint32_t>(game_seed),
                    static_cast<std::uint32_t>(game_seed >> 32),
                    static_cast<std::uint32_t>(agent_seed),
                    static_cast<std::uint32_t>(agent_seed >> 32),
                    static_cast<std::uint32_t>(seat)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
}

MatchResult play_match(const Game& game, const AgentFactory& agent_a,
                       std::uint64_t seed_a, const AgentFactory& agent_b,
                       std::uint64_t seed_b, int n_games,
                       std::uint64_t base_seed, int workers) {
  if (n_games < 2 || n_games % 2 != 0) {
    throw Error(ErrorKind::kOddGameCount,
                "match needs a positive even game count, got " +
                    std::to_string(n_games));
  }
  const int half = n_games / 2;
  struct GameRecord {
    bool a_first;
    double score_p1;
  };
  MatchResult result;
  ordered_parallel_for(
      static_cast<std::size_t>(n_games), workers,
      [&](std::size_t i) {
        const bool a_first = static_cast<int>(i) < half;
        const std::uint64_t game_seed = base_seed + i % half;
        auto first = a_first
                         ? agent_a(derive_agent_seed(game_seed, seed_a, 0))
                         : agent_b(derive_agent_seed(game_seed, seed_b, 0));
        auto second = a_first
                          ? agent_b(derive_agent_seed(game_seed, seed_b, 1))
                          : agent_a(derive_agent_seed(game_seed, seed_a, 1));
        const Outcome outcome = play_game(game, *first, *second);
        return GameRecord{a_first, outcome.score_p1};
      },
      [&](std::size_t, GameRecord rec) {
        const double for_a = rec.a_first ? rec.score_p1 : -rec.score_p1;
        ++result.games;
        if (for_a > 0) {
          ++result.wins;
        } else if (for_a < 0) {
          ++result.losses;
        } else {
          ++result.draws;
        }
      });
  return result;
}

namespace {

AgentFactory factory_for(const AgentSpec& spec, const Game& game,
                         std::optional<std::uint64_t> obfuscation_seed) {
  SearchConfig config;
  config.iterations = spec.iterations;
  config.exploration_c = spec.exploration_c;
  if (spec.kind == AgentKind::kUctPlayout) {
    return [config](std::uint64_t seed) {
      return std::make_unique<UctAgent>(config, seed);
    };
  }
  std::shared_ptr<const ValueNet> net;
  try {
    net = std::make_shared<const ValueNet>(load_model(spec.model_path));
  } catch (const Error& e) {
    throw Error(ErrorKind::kModelLoadFailure,
                spec.model_path + ": " + e.what());
  }
  if (input_features(net->config()) != game.spec().feature_dim ||
      input_tiles(net->config()) < game.tile_count() ||
      (net->architecture() == Architecture::kConv &&
       input_tiles(net->config()) != game.tile_count())) {
    throw Error(ErrorKind::kModelLoadFailure,
                spec.model_path + " does not fit game " + game.name());
  }
  std::optional<TilePermutation> perm;
  if (obfuscation_seed) {
    perm = make_permutation(game.tile_count(), *obfuscation_seed);
  }
  return [config, net, perm](std::uint64_t seed) {
    return std::make_unique<UctAgent>(config, seed, net, perm);
  };
}

}  // namespace

MatchResult play_match(const Game& game, const AgentSpec& agent_a,
                       const AgentSpec& agent_b, int n_games,
                       std::uint64_t base_seed,
                       std::optional<std::uint64_t> obfuscation_seed,
                       int workers) {
  if (n_games < 2 || n_games % 2 != 0) {
    throw Error(ErrorKind::kOddGameCount,
                "match needs a positive even game count, got " +
                    std::to_string(n_games));
  }
  for (const AgentSpec* spec : {&agent_a, &agent_b}) {
    if (spec->iterations < 1) {
      throw Error(ErrorKind::kInvalidArgument, "agent iterations must be >= 1");
    }
  }
  const AgentFactory a = factory_for(agent_a, game, obfuscation_seed);
  const AgentFactory b = factory_for(agent_b, game, obfuscation_seed);
  return play_match(game, a, agent_a.seed, b, agent_b.seed, n_games, base_seed,
                    workers);
}

std::string format_score(const MatchResult& result) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%d%% ±%.1f",
                static_cast<int>(std::lround(result.score() * 100.0)),
                result.ci95() * 100.0);
  return buf;
}

std::string report_text(const std::vector<ReportEntry>& entries) {
  std::size_t label_w = 8;
  std::size_t game_w = 5;
  for (const auto& e : entries) {
    label_w = std::max(label_w, e.label.size() + 2);
    game_w = std::max(game_w, e.game.size() + 2);
  }
  const int lw = static_cast<int>(label_w);
  const int gw = static_cast<int>(game_w);
  std::ostringstream os;
  os << std::left << std::setw(lw) << "pairing" << std::setw(gw) << "game"
     << std::setw(12) << "score" << std::setw(14) << "W/D/L" << "n\n";
  for (const auto& e : entries) {
    const auto& r = e.result;
    os << std::left << std::setw(lw) << e.label << std::setw(gw) << e.game
       << std::setw(12) << format_score(r) << std::setw(14)
       << (std::to_string(r.wins) + "/" + std::to_string(r.draws) + "/" +
           std::to_string(r.losses))
       << r.games << '\n';
  }
  return os.str();
}

namespace {

nlohmann::json agent_json(const AgentSpec& spec) {
  return {{"kind", spec.kind == AgentKind::kUctPlayout ? "uct" : "uct_value"},
          {"iterations", spec.iterations},
          {"exploration_c", spec.exploration_c},
          {"seed", spec.seed},
          {"model", spec.model_path}};
}

}  // namespace

std::string report_jsonl(const std::vector<ReportEntry>& entries) {
  std::string out;
  for (const auto& e : entries) {
    nlohmann::json rec = {
        {"label", e.label},
        {"game", e.game},
        {"wins", e.result.wins},
        {"draws", e.result.draws},
        {"losses", e.result.losses},
        {"n", e.result.games},
        {"p", e.result.score()},
        {"ci95", e.result.ci95()},
        {"agent_a", agent_json(e.agent_a)},
        {"agent_b", agent_json(e.agent_b)},
        {"obfuscation_seed", e.obfuscation_seed
                                 ? nlohmann::json(*e.obfuscation_seed)
                                 : nlohmann::json(nullptr)},
    };
    out += rec.dump();
    out += '\n';
  }
  return out;
}

}  // namespace zggp
