#include <doctest.h>

#include <fstream>
#include <iterator>

#include "zggp/error.hpp"
#include "zggp/neural/model_io.hpp"
#include "zggp/train.hpp"

using namespace zggp;

namespace {

std::vector<char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<TrainingSample> distinct_positions(const Game& game, int count,
                                               std::uint64_t seed) {
  std::vector<TrainingSample> out;
  Rng rng(seed);
  while (static_cast<int>(out.size()) < count) {
    GameState s = game.initial_state();
    const int depth = 1 + static_cast<int>(rng() % 6);
    for (int i = 0; i < depth && !game.is_terminal(s); ++i) {
      const auto moves = game.legal_moves(s);
      s = game.apply_move(s, moves[rng() % moves.size()]);
    }
    if (game.is_terminal(s)) continue;
    TrainingSample sample{game.encode_tiles(s),
                          static_cast<float>(static_cast<int>(rng() % 3) - 1)};
    bool dup = false;
    for (const auto& o : out) dup = dup || o.encoding == sample.encoding;
    if (!dup) out.push_back(sample);
  }
  return out;
}

const std::string& small_dataset() {
  static const std::string path = [] {
    const auto game = make_game("connect4");
    GenerateOptions opts;
    opts.plays = 6;
    opts.search.iterations = 40;
    opts.base_seed = 3;
    generate_dataset(*game, opts, "train_ds.bin");
    return std::string("train_ds.bin");
  }();
  return path;
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("memorizes a tiny dataset") {
  const auto game = make_game("tictactoe");
  const auto samples = distinct_positions(*game, 10, 1);
  TrainConfig cfg;
  cfg.epochs = 500;
  cfg.validation_fraction = 0.0;
  // Step sizes below the default keep Adam clear of post-convergence spikes.
  for (auto [arch, lr] : {std::pair{Architecture::kAttention, 1e-4},
                          std::pair{Architecture::kConv, 5e-4}}) {
    cfg.arch = arch;
    cfg.lr = lr;
    ValueNet net = init_value_net(resolve_net_config(cfg, *game), cfg.init_seed);
    CHECK(net.params().size() >= 10 * samples.size());
    const TrainResult r = train_on_samples(net, samples, cfg);
    CHECK(r.train_loss < 1e-3);
    CHECK_FALSE(r.val_loss.has_value());
    REQUIRE(r.epoch_losses.size() == 500);
    // Non-increasing when smoothed over 5-epoch windows.
    for (std::size_t w = 5; w + 5 <= r.epoch_losses.size(); w += 5) {
      double prev = 0, cur = 0;
      for (std::size_t i = 0; i < 5; ++i) {
        prev += r.epoch_losses[w - 5 + i];
        cur += r.epoch_losses[w + i];
      }
      CHECK(cur <= prev * (1 + 1e-3) + 1e-7);
    }
  }
}

TEST_CASE("constant zero targets") {
  const auto game = make_game("connect4");
  auto samples = distinct_positions(*game, 64, 2);
  for (auto& s : samples) s.target = 0.0f;
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.batch_size = 16;
  ValueNet net = init_value_net(resolve_net_config(cfg, *game), 5);
  train_on_samples(net, samples, cfg);
  for (const auto& s : samples) CHECK(std::abs(value_forward(net, s.encoding)) < 0.1);
}

TEST_CASE("validation split comes from the tail") {
  const auto game = make_game("tictactoe");
  auto samples = distinct_positions(*game, 40, 3);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.validation_fraction = 0.1;
  ValueNet net = init_value_net(resolve_net_config(cfg, *game), 0);
  const ValueNet initial = net;
  const TrainResult r = train_on_samples(net, samples, cfg);
  CHECK(r.train_samples == 36);
  CHECK(r.val_samples == 4);
  REQUIRE(r.val_loss.has_value());
  NetWorkspace<float> ws(net.config());
  const auto tail = std::span<const TrainingSample>(samples).last(4);
  CHECK(*r.val_loss == doctest::Approx(batch_loss(net, tail, ws)));
  // Changing only the held-out samples leaves the trained weights untouched.
  for (auto& s : std::span<TrainingSample>(samples).last(4)) s.target = -s.target + 0.5f;
  ValueNet again = initial;
  train_on_samples(again, samples, cfg);
  CHECK(std::equal(again.params().data().begin(), again.params().data().end(),
                   net.params().data().begin()));
}

TEST_CASE("training is deterministic and worker independent") {
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 32;
  cfg.shuffle_seed = 9;
  cfg.init_seed = 9;
  cfg.workers = 1;
  const TrainResult a = train_model(small_dataset(), cfg, "train_a.mdl");
  const TrainResult b = train_model(small_dataset(), cfg, "train_b.mdl");
  cfg.workers = 4;
  const TrainResult c = train_model(small_dataset(), cfg, "train_c.mdl");
  CHECK(file_bytes("train_a.mdl") == file_bytes("train_b.mdl"));
  CHECK(file_bytes("train_a.mdl") == file_bytes("train_c.mdl"));
  CHECK(a.epoch_losses == b.epoch_losses);
  CHECK(a.epoch_losses == c.epoch_losses);
  cfg.shuffle_seed = 10;
  train_model(small_dataset(), cfg, "train_d.mdl");
  CHECK(file_bytes("train_a.mdl") != file_bytes("train_d.mdl"));
}

TEST_CASE("losses stay in range") {
  for (Architecture arch : {Architecture::kAttention, Architecture::kConv}) {
    TrainConfig cfg;
    cfg.arch = arch;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    const TrainResult r = train_model(small_dataset(), cfg, "train_range.mdl");
    CHECK(r.train_loss >= 0.0);
    CHECK(r.train_loss <= 4.0);
    REQUIRE(r.val_loss.has_value());
    CHECK(*r.val_loss >= 0.0);
    CHECK(*r.val_loss <= 4.0);
    for (double l : r.epoch_losses) CHECK((l >= 0.0 && l <= 4.0));
    const ValueNet net = load_model("train_range.mdl");
    CHECK(net.architecture() == arch);
  }
}

TEST_CASE("training errors") {
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidArgument;
  };
  TrainConfig cfg;
  cfg.epochs = 1;
  const auto hex = make_game("hex-5");
  cfg.net = make_net_config(Architecture::kConv, Preset::kSmall, hex->spec());
  CHECK(kind_of([&] { train_model(small_dataset(), cfg, "train_bad.mdl"); }) ==
        ErrorKind::kShapeMismatch);
  cfg.net.reset();

  const auto game = make_game("tictactoe");
  Dataset empty;
  empty.header.game_id = "tictactoe";
  empty.header.tiles = 9;
  empty.header.features = 4;
  write_dataset("train_empty.bin", empty);
  CHECK(kind_of([&] { train_model("train_empty.bin", cfg, "train_bad.mdl"); }) ==
        ErrorKind::kEmptyDataset);
  CHECK(kind_of([&] { train_model("train_missing.bin", cfg, "train_bad.mdl"); }) ==
        ErrorKind::kIoFailure);
  CHECK(kind_of([&] { train_model(small_dataset(), cfg, "no/such/dir/m.mdl"); }) ==
        ErrorKind::kIoFailure);
  ValueNet net = init_value_net(resolve_net_config(cfg, *game), 0);
  CHECK(kind_of([&] { train_on_samples(net, {}, cfg); }) == ErrorKind::kEmptyDataset);
}

}
