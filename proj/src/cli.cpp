#include "zggp/cli.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <algorithm>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "zggp/datagen.hpp"
#include "zggp/error.hpp"
#include "zggp/eval.hpp"
#include "zggp/neural/gradcheck.hpp"
#include "zggp/neural/model_io.hpp"
#include "zggp/train.hpp"
#include "zggp/worker_pool.hpp"

namespace zggp {

using nlohmann::json;

std::string manifest_path(const std::string& artifact) {
  return artifact + ".manifest.json";
}

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_manifest(const std::string& artifact, const std::string& subcommand,
                    const std::vector<std::string>& resolved_args,
                    json config) {
  json manifest = {
      {"tool", "zggp"},
      {"version", kToolVersion},
      {"subcommand", subcommand},
      {"args", resolved_args},
      {"config", std::move(config)},
      {"artifact", artifact},
  };
  std::ofstream out(manifest_path(artifact));
  if (!out) {
    throw Error(ErrorKind::kIoFailure, "cannot write " + manifest_path(artifact));
  }
  out << manifest.dump(2) << '\n';
}

std::shared_ptr<const Game> game_or_usage(const std::string& id) {
  try {
    return make_game(id);
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
  std::string game;
  int plays = 1000;
  int iterations = 600;
  double exploration_c = 1.414;
  int temperature_plies = 4;
  std::uint64_t seed = 0;
  int workers = default_workers();
  std::optional<std::uint64_t> permute_seed;
  std::string out;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
  app.add_option("--game", a.game, "Game id")->required();
  app.add_option("--plays", a.plays, "Number of MCTS-vs-MCTS games")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--iterations", a.iterations, "UCT iterations per move")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--exploration-c", a.exploration_c, "UCT exploration constant")
      ->capture_default_str();
  app.add_option("--temperature-plies", a.temperature_plies,
                 "Opening plies sampled by visit count")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", a.seed, "Base seed (game i uses seed + i)")
      ->capture_default_str();
  app.add_option("--workers", a.workers, "Worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--permute-seed", a.permute_seed,
                 "Obfuscate tiles with a fixed random permutation");
  app.add_option("--out", a.out, "Output dataset path")->required();
}

int run_generate(const GenerateArgs& a, std::ostream& out) {
  const auto game = game_or_usage(a.game);
  GenerateOptions opts;
  opts.plays = a.plays;
  opts.search.iterations = a.iterations;
  opts.search.exploration_c = a.exploration_c;
  opts.temperature_plies = a.temperature_plies;
  opts.workers = a.workers;
  opts.base_seed = a.seed;
  opts.obfuscation_seed = a.permute_seed;
  const auto start = std::chrono::steady_clock::now();
  const DatasetHeader header = generate_dataset(*game, opts, a.out);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();

  std::vector<std::string> args = {
      "generate",      "--game",         a.game,
      "--plays",       std::to_string(a.plays),
      "--iterations",  std::to_string(a.iterations),
      "--exploration-c", fmt_double(a.exploration_c),
      "--temperature-plies", std::to_string(a.temperature_plies),
      "--seed",        std::to_string(a.seed),
      "--workers",     std::to_string(a.workers),
      "--out",         a.out};
  if (a.permute_seed) {
    args.push_back("--permute-seed");
    args.push_back(std::to_string(*a.permute_seed));
  }
  write_manifest(a.out, "generate", args,
                 {{"game", a.game},
                  {"plays", a.plays},
                  {"iterations", a.iterations},
                  {"exploration_c", a.exploration_c},
                  {"temperature_plies", a.temperature_plies},
                  {"seed", a.seed},
                  {"workers", a.workers},
                  {"permute_seed", a.permute_seed ? json(*a.permute_seed)
                                                  : json(nullptr)},
                  {"samples", header.sample_count}});
  out << "generated " << header.sample_count << " samples from " << a.plays
      << " plays of " << a.game << " in " << std::fixed << std::setprecision(1)
      << secs << "s -> " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string dataset;
  std::string arch = "attention";
  std::string preset = "default";
  std::string positional = "sinusoidal";
  int epochs = 8;
  int batch_size = 128;
  double lr = 1e-3;
  double validation_fraction = 0.05;
  std::uint64_t seed = 0;
  int workers = default_workers();
  std::string out;
};

void add_train(CLI::App& app, TrainArgs& a) {
  app.add_option("--dataset", a.dataset, "Dataset file")->required();
  app.add_option("--arch", a.arch, "Network architecture")
      ->capture_default_str()
      ->check(CLI::IsMember({"attention", "conv"}));
  app.add_option("--preset", a.preset, "Network size bundle")
      ->capture_default_str()
      ->check(CLI::IsMember({"small", "default"}));
  app.add_option("--positional", a.positional, "Positional embedding (attention)")
      ->capture_default_str()
      ->check(CLI::IsMember({"sinusoidal", "learned"}));
  app.add_option("--epochs", a.epochs)->capture_default_str()->check(
      CLI::PositiveNumber);
  app.add_option("--batch-size", a.batch_size)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--lr", a.lr)->capture_default_str();
  app.add_option("--validation-fraction", a.validation_fraction)
      ->capture_default_str()
      ->check(CLI::Range(0.0, 0.5));
  app.add_option("--seed", a.seed, "Shuffle and initialization seed")
      ->capture_default_str();
  app.add_option("--workers", a.workers, "Gradient worker threads")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--out", a.out, "Output model path")->required();
}

int run_train(const TrainArgs& a, std::ostream& out) {
  const DatasetHeader header = read_dataset_header(a.dataset);
  const auto game = make_game(header.game_id);
  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.lr = a.lr;
  cfg.validation_fraction = a.validation_fraction;
  cfg.shuffle_seed = a.seed;
  cfg.init_seed = a.seed;
  cfg.workers = a.workers;
  cfg.arch = a.arch == "conv" ? Architecture::kConv : Architecture::kAttention;
  cfg.preset = a.preset == "small" ? Preset::kSmall : Preset::kDefault;
  if (cfg.arch == Architecture::kConv && !game->spec().grid) {
    throw UsageError("--arch conv requires a game with a grid; " +
                     header.game_id + " has none");
  }
  NetConfig net = make_net_config(cfg.arch, cfg.preset, game->spec());
  if (auto* attn = std::get_if<AttentionNetConfig>(&net)) {
    attn->positional = a.positional == "learned" ? PositionalMode::kLearned
                                                 : PositionalMode::kSinusoidal;
  }
  cfg.net = net;

  const TrainResult result = train_model(a.dataset, cfg, a.out);
  write_manifest(
      a.out, "train",
      {"train", "--dataset", a.dataset, "--arch", a.arch, "--preset", a.preset,
       "--positional", a.positional, "--epochs", std::to_string(a.epochs),
       "--batch-size", std::to_string(a.batch_size), "--lr", fmt_double(a.lr),
       "--validation-fraction", fmt_double(a.validation_fraction), "--seed",
       std::to_string(a.seed), "--workers", std::to_string(a.workers), "--out",
       a.out},
      {{"dataset", a.dataset},
       {"game", header.game_id},
       {"arch", a.arch},
       {"preset", a.preset},
       {"positional", a.positional},
       {"epochs", a.epochs},
       {"batch_size", a.batch_size},
       {"lr", a.lr},
       {"validation_fraction", a.validation_fraction},
       {"seed", a.seed},
       {"workers", a.workers},
       {"train_loss", result.train_loss},
       {"val_loss", result.val_loss ? json(*result.val_loss) : json(nullptr)},
       {"epoch_losses", result.epoch_losses}});
  out << std::fixed << std::setprecision(5);
  for (std::size_t e = 0; e < result.epoch_losses.size(); ++e) {
    out << "epoch " << e + 1 << " loss " << result.epoch_losses[e] << '\n';
  }
  out << "train_loss " << result.train_loss;
  if (result.val_loss) out << " val_loss " << *result.val_loss;
  out << " (" << result.train_samples << " train / " << result.val_samples
      << " val samples, " << std::setprecision(1) << result.seconds
      << "s) -> " << a.out << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::string game;
  std::string model;
  std::string opponent = "uct";
  int iterations = 600;
  int opponent_iterations = 0;
  double exploration_c = 1.414;
  int games = 400;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> permute_seed;
  int workers = default_workers();
  std::string label;
  std::string out;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  app.add_option("--game", a.game, "Game id")->required();
  app.add_option("--model", a.model,
                 "Model for the evaluated agent (omit for a playout UCT agent)");
  app.add_option("--opponent", a.opponent,
                 "Opponent: 'uct' or a model file for a value-net agent")
      ->capture_default_str();
  app.add_option("--iterations", a.iterations, "Iterations of the evaluated agent")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--opponent-iterations", a.opponent_iterations,
                 "Opponent iterations (default: same as --iterations)")
      ->check(CLI::PositiveNumber);
  app.add_option("--exploration-c", a.exploration_c)->capture_default_str();
  app.add_option("--games", a.games, "Number of games (even)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--seed", a.seed)->capture_default_str();
  app.add_option("--permute-seed", a.permute_seed,
                 "Evaluate value-net agents on permuted tiles");
  app.add_option("--workers", a.workers)->capture_default_str()->check(
      CLI::PositiveNumber);
  app.add_option("--label", a.label, "Label for the report row");
  app.add_option("--out", a.out,
                 "Report path; also writes <out>.jsonl and a manifest");
}

int run_eval(const EvalArgs& a, std::ostream& out) {
  const auto game = game_or_usage(a.game);
  if (a.games % 2 != 0) throw UsageError("--games must be even");
  AgentSpec agent_a;
  agent_a.iterations = a.iterations;
  agent_a.exploration_c = a.exploration_c;
  agent_a.seed = 1;
  if (!a.model.empty()) {
    agent_a.kind = AgentKind::kUctValue;
    agent_a.model_path = a.model;
  }
  AgentSpec agent_b;
  agent_b.iterations = a.opponent_iterations > 0 ? a.opponent_iterations
                                                 : a.iterations;
  agent_b.exploration_c = a.exploration_c;
  agent_b.seed = 2;
  if (a.opponent != "uct") {
    agent_b.kind = AgentKind::kUctValue;
    agent_b.model_path = a.opponent;
  }
  const auto start = std::chrono::steady_clock::now();
  const MatchResult result = play_match(*game, agent_a, agent_b, a.games,
                                        a.seed, a.permute_seed, a.workers);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
          .count();
  ReportEntry entry;
  entry.label = a.label.empty()
                    ? agent_a.describe() + " vs " + agent_b.describe()
                    : a.label;
  entry.game = a.game;
  entry.agent_a = agent_a;
  entry.agent_b = agent_b;
  entry.obfuscation_seed = a.permute_seed;
  entry.result = result;
  const std::string text = report_text({entry});
  out << text;
  out << "(" << std::fixed << std::setprecision(1) << secs << "s)\n";
  if (!a.out.empty()) {
    {
      std::ofstream f(a.out);
      if (!f) throw Error(ErrorKind::kIoFailure, "cannot write " + a.out);
      f << text;
    }
    {
      std::ofstream f(a.out + ".jsonl");
      if (!f) throw Error(ErrorKind::kIoFailure, "cannot write " + a.out + ".jsonl");
      f << report_jsonl({entry});
    }
    std::vector<std::string> args = {
        "eval", "--game", a.game, "--opponent", a.opponent, "--iterations",
        std::to_string(a.iterations), "--opponent-iterations",
        std::to_string(agent_b.iterations), "--exploration-c",
        fmt_double(a.exploration_c), "--games", std::to_string(a.games),
        "--seed", std::to_string(a.seed), "--workers",
        std::to_string(a.workers), "--out", a.out};
    if (!a.model.empty()) {
      args.push_back("--model");
      args.push_back(a.model);
    }
    if (!a.label.empty()) {
      args.push_back("--label");
      args.push_back(a.label);
    }
    if (a.permute_seed) {
      args.push_back("--permute-seed");
      args.push_back(std::to_string(*a.permute_seed));
    }
    write_manifest(a.out, "eval", args,
                   {{"game", a.game},
                    {"model", a.model},
                    {"opponent", a.opponent},
                    {"iterations", a.iterations},
                    {"opponent_iterations", agent_b.iterations},
                    {"exploration_c", a.exploration_c},
                    {"games", a.games},
                    {"seed", a.seed},
                    {"workers", a.workers},
                    {"permute_seed", a.permute_seed ? json(*a.permute_seed)
                                                    : json(nullptr)},
                    {"p", result.score()},
                    {"ci95", result.ci95()}});
  }
  return 0;
}

// ---------------------------------------------------------------------------

struct GradcheckArgs {
  std::string arch = "attention";
  std::string game = "tictactoe";
  std::string preset = "tiny";
  std::uint64_t seed = 0;
  int samples = 3;
};

void add_gradcheck(CLI::App& app, GradcheckArgs& a) {
  app.add_option("--arch", a.arch)
      ->capture_default_str()
      ->check(CLI::IsMember({"attention", "conv"}));
  app.add_option("--game", a.game)->capture_default_str();
  app.add_option("--preset", a.preset,
                 "tiny (<= 5k parameters), small or default")
      ->capture_default_str()
      ->check(CLI::IsMember({"tiny", "small", "default"}));
  app.add_option("--seed", a.seed)->capture_default_str();
  app.add_option("--samples", a.samples, "Positions in the checked batch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

int run_gradcheck(const GradcheckArgs& a, std::ostream& out) {
  const auto game = game_or_usage(a.game);
  const Architecture arch =
      a.arch == "conv" ? Architecture::kConv : Architecture::kAttention;
  if (arch == Architecture::kConv && !game->spec().grid) {
    throw UsageError("--arch conv requires a game with a grid");
  }
  const NetConfig config =
      a.preset == "tiny"
          ? gradcheck_config(arch, game->spec())
          : make_net_config(arch,
                            a.preset == "small" ? Preset::kSmall : Preset::kDefault,
                            game->spec());
  GradCheckOptions opts;
  opts.samples = a.samples;
  const GradCheckReport report = gradient_check(config, *game, a.seed, opts);
  const bool ok = report.max_relative_error <= 1e-4;
  out << "max relative error " << std::scientific << std::setprecision(3)
      << report.max_relative_error << " over " << report.parameters
      << " parameters, " << report.kinks << " skipped at ReLU kinks (worst "
      << report.worst_parameter << ": analytic "
      << report.worst_analytic << ", numeric " << report.worst_numeric << ") "
      << (ok ? "OK" : "FAIL") << '\n';
  return ok ? 0 : 2;
}

// ---------------------------------------------------------------------------

struct PlayArgs {
  std::string game;
  std::string a = "uct";
  std::string b = "uct";
  int a_iterations = 600;
  int b_iterations = 600;
  double exploration_c = 1.414;
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> permute_seed;
  int top = 3;
};

void add_play(CLI::App& app, PlayArgs& a) {
  app.add_option("--game", a.game, "Game id")->required();
  app.add_option("--a", a.a, "First player: 'uct' or a model file")
      ->capture_default_str();
  app.add_option("--b", a.b, "Second player: 'uct' or a model file")
      ->capture_default_str();
  app.add_option("--a-iterations", a.a_iterations)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--b-iterations", a.b_iterations)
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--exploration-c", a.exploration_c)->capture_default_str();
  app.add_option("--seed", a.seed)->capture_default_str();
  app.add_option("--permute-seed", a.permute_seed);
  app.add_option("--top", a.top, "Root children shown per ply")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
}

std::unique_ptr<Agent> make_play_agent(const Game& game, const std::string& who,
                                       int iterations, double c,
                                       std::uint64_t seed,
                                       std::optional<std::uint64_t> permute) {
  SearchConfig cfg;
  cfg.iterations = iterations;
  cfg.exploration_c = c;
  if (who == "uct") return std::make_unique<UctAgent>(cfg, seed);
  std::shared_ptr<const ValueNet> net;
  try {
    net = std::make_shared<const ValueNet>(load_model(who));
  } catch (const Error& e) {
    throw Error(ErrorKind::kModelLoadFailure, who + ": " + e.what());
  }
  std::optional<TilePermutation> perm;
  if (permute) perm = make_permutation(game.tile_count(), *permute);
  return std::make_unique<UctAgent>(cfg, seed, net, perm);
}

int run_play(const PlayArgs& a, std::ostream& out) {
  const auto game = game_or_usage(a.game);
  auto first = make_play_agent(*game, a.a, a.a_iterations, a.exploration_c,
                               derive_agent_seed(a.seed, 1, 0), a.permute_seed);
  auto second = make_play_agent(*game, a.b, a.b_iterations, a.exploration_c,
                                derive_agent_seed(a.seed, 2, 1), a.permute_seed);
  const Outcome outcome = play_game(
      *game, *first, *second,
      [&](const GameState& state, Move move, const Agent& agent) {
        out << "ply " << std::setw(3) << state.ply << "  "
            << (state.to_move == Player::kP1 ? "P1" : "P2") << "  "
            << std::setw(6) << game->move_to_string(move);
        if (const SearchTree* tree = agent.tree()) {
          std::vector<const Node*> kids;
          for (const Node& c : tree->root().children) kids.push_back(&c);
          std::stable_sort(kids.begin(), kids.end(),
                           [](const Node* x, const Node* y) {
                             return x->visits > y->visits;
                           });
          out << "  root n=" << tree->root().visits;
          for (int i = 0; i < a.top && i < static_cast<int>(kids.size()); ++i) {
            out << "  " << game->move_to_string(kids[i]->move) << ":"
                << kids[i]->visits << "/" << std::fixed << std::setprecision(3)
                << kids[i]->mean();
          }
        }
        out << '\n';
      });
  out << "result score_p1 " << outcome.score_p1 << '\n';
  return 0;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Value-network MCTS training and evaluation for board games",
               "zggp"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenerateArgs gen;
  TrainArgs train;
  EvalArgs eval;
  GradcheckArgs grad;
  PlayArgs play;
  auto* gen_cmd = app.add_subcommand("generate", "Generate a dataset from MCTS plays");
  add_generate(*gen_cmd, gen);
  auto* train_cmd = app.add_subcommand("train", "Train a value network");
  add_train(*train_cmd, train);
  auto* eval_cmd = app.add_subcommand("eval", "Play a match and report the score");
  add_eval(*eval_cmd, eval);
  auto* grad_cmd =
      app.add_subcommand("gradcheck", "Compare gradients with finite differences");
  add_gradcheck(*grad_cmd, grad);
  auto* play_cmd = app.add_subcommand("play", "Trace one game between two agents");
  add_play(*play_cmd, play);

  // CLI11 expects the arguments without the program name, reversed.
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  CLI::App* active = &app;
  try {
    app.parse(reversed);
    for (CLI::App* sub : app.get_subcommands()) active = sub;
  } catch (const CLI::CallForHelp&) {
    for (CLI::App* sub : app.get_subcommands()) active = sub;
    out << active->help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kToolVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    for (CLI::App* sub : app.get_subcommands()) active = sub;
    err << "error: " << e.what() << "\n\n" << active->help();
    return 1;
  }

  try {
    if (gen_cmd->parsed()) return run_generate(gen, out);
    if (train_cmd->parsed()) return run_train(train, out);
    if (eval_cmd->parsed()) return run_eval(eval, out);
    if (grad_cmd->parsed()) return run_gradcheck(grad, out);
    if (play_cmd->parsed()) return run_play(play, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << active->help();
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  err << app.help();
  return 1;
}

int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args, std::cout, std::cerr);
}

}  // namespace zggp
