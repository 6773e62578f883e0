#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>

#include "zggp/datagen.hpp"
#include "zggp/error.hpp"

using namespace zggp;

namespace {

std::vector<char> file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

GenerateOptions quick_options(int plays, int workers) {
  GenerateOptions opts;
  opts.plays = plays;
  opts.search.iterations = 60;
  opts.workers = workers;
  opts.base_seed = 42;
  return opts;
}

}  // namespace

TEST_SUITE("datagen") {

TEST_CASE("permutations") {
  CHECK(make_permutation(1, 5).mapping == std::vector<int>{0});
  for (int t : {2, 9, 36, 121}) {
    const TilePermutation p = make_permutation(t, 3);
    CHECK(p.is_bijection());
    CHECK(p.seed == 3);
    CHECK(make_permutation(t, 3).mapping == p.mapping);
    const TilePermutation inv = p.inverse();
    for (int i = 0; i < t; ++i) {
      CHECK(inv.mapping[p.mapping[i]] == i);
      CHECK(p.mapping[inv.mapping[i]] == i);
    }
  }
  CHECK(make_permutation(36, 3).mapping != make_permutation(36, 4).mapping);
}

TEST_CASE("training game targets follow the mover") {
  for (const char* id : {"tictactoe", "connect4", "breakthrough-5", "hex-4"}) {
    const auto game = make_game(id);
    SearchConfig search;
    search.iterations = 80;
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
      const auto samples = play_training_game(*game, search, 4, seed);
      REQUIRE_FALSE(samples.empty());
      CHECK(samples == play_training_game(*game, search, 4, seed));
      // Samples are consecutive positions of one game: the mover alternates
      // (no passes in these games) and z flips sign with it.
      const float z0 = samples[0].target;
      CHECK((z0 == 1.0f || z0 == 0.0f || z0 == -1.0f));
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& enc = samples[i].encoding;
        const bool p1_to_move = enc.at(0, enc.features - 1) == 1.0f;
        CHECK(p1_to_move == (i % 2 == 0));
        CHECK(samples[i].target == (i % 2 == 0 ? z0 : -z0));
      }
      // First sample is the initial position.
      CHECK(samples[0].encoding == game->encode_tiles(game->initial_state()));
    }
  }
}

TEST_CASE("training game outcome matches an independent replay") {
  // Rebuild the game from consecutive encodings: each step must be reachable
  // by exactly one legal move, and the final outcome decides z.
  const auto game = make_game("connect4");
  SearchConfig search;
  search.iterations = 100;
  for (std::uint64_t seed = 10; seed < 14; ++seed) {
    const auto samples = play_training_game(*game, search, 4, seed);
    GameState s = game->initial_state();
    for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
      bool advanced = false;
      for (Move m : game->legal_moves(s)) {
        const GameState next = game->apply_move(s, m);
        if (game->encode_tiles(next) == samples[i + 1].encoding) {
          s = next;
          advanced = true;
          break;
        }
      }
      REQUIRE(advanced);
    }
    // One more move ends the game; find the terminal continuation whose
    // payoff is consistent with the stored z for the last mover.
    const float z_last = samples.back().target;
    bool consistent = false;
    for (Move m : game->legal_moves(s)) {
      const GameState end = game->apply_move(s, m);
      if (game->is_terminal(end) &&
          game->terminal_payoff(end).score_for(s.to_move) == z_last) {
        consistent = true;
      }
    }
    CHECK(consistent);
  }
}

TEST_CASE("obfuscated samples are row permutations") {
  const auto game = make_game("breakthrough-5");
  SearchConfig search;
  search.iterations = 50;
  const TilePermutation perm = make_permutation(game->tile_count(), 8);
  const auto plain = play_training_game(*game, search, 4, 3);
  const auto mixed = play_training_game(*game, search, 4, 3, &perm);
  REQUIRE(plain.size() == mixed.size());
  for (std::size_t i = 0; i < plain.size(); ++i) {
    CHECK(plain[i].target == mixed[i].target);
    for (int r = 0; r < game->tile_count(); ++r) {
      const auto a = mixed[i].encoding.row(r);
      const auto b = plain[i].encoding.row(perm.mapping[r]);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
  }
}

TEST_CASE("dataset files are identical for any worker count") {
  const auto game = make_game("breakthrough-6");
  const DatasetHeader h1 = generate_dataset(*game, quick_options(12, 1), "dg_w1.bin");
  const DatasetHeader h8 = generate_dataset(*game, quick_options(12, 8), "dg_w8.bin");
  CHECK(h1 == h8);
  CHECK(file_bytes("dg_w1.bin") == file_bytes("dg_w8.bin"));
  auto other = quick_options(12, 1);
  other.base_seed = 43;
  generate_dataset(*game, other, "dg_other.bin");
  CHECK(file_bytes("dg_w1.bin") != file_bytes("dg_other.bin"));
}

TEST_CASE("dataset contents and header") {
  const auto game = make_game("hex-4");
  auto opts = quick_options(5, 2);
  const DatasetHeader header = generate_dataset(*game, opts, "dg_hex.bin");
  const Dataset ds = read_dataset("dg_hex.bin");
  CHECK(ds.header == header);
  CHECK(read_dataset_header("dg_hex.bin") == header);
  CHECK(header.game_id == "hex-4");
  CHECK(header.tiles == 16);
  CHECK(header.features == 4);
  CHECK(header.iterations == 60);
  CHECK(header.generator_seed == 42);
  CHECK(header.temperature_plies == 4);
  CHECK(header.exploration_c == doctest::Approx(1.414));
  CHECK_FALSE(header.obfuscation_seed.has_value());
  // Samples are the concatenation of games base_seed + i in order.
  std::vector<TrainingSample> expected;
  for (int i = 0; i < 5; ++i) {
    const auto g = play_training_game(*game, opts.search, 4, 42 + i);
    expected.insert(expected.end(), g.begin(), g.end());
  }
  CHECK(ds.samples == expected);
  CHECK(header.sample_count == expected.size());
  // Fixed-size records after the header.
  const std::size_t header_bytes = 8 + 2 + 5 + 4 + 4 + 8 + 8 + 4 + 4 + 4 + 1 + 8;
  CHECK(std::filesystem::file_size("dg_hex.bin") ==
        header_bytes + expected.size() * (16 * 4 + 1) * 4);
}

TEST_CASE("obfuscated dataset") {
  const auto game = make_game("hex-4");
  auto opts = quick_options(3, 1);
  generate_dataset(*game, opts, "dg_plain.bin");
  opts.obfuscation_seed = 99;
  generate_dataset(*game, opts, "dg_perm.bin");
  const Dataset plain = read_dataset("dg_plain.bin");
  const Dataset perm = read_dataset("dg_perm.bin");
  CHECK(perm.header.obfuscation_seed == std::optional<std::uint64_t>(99));
  REQUIRE(plain.samples.size() == perm.samples.size());
  const TilePermutation p = make_permutation(16, 99);
  for (std::size_t i = 0; i < plain.samples.size(); ++i) {
    CHECK(plain.samples[i].target == perm.samples[i].target);
    CHECK(perm.samples[i].encoding == [&] {
      TileEncoding e = plain.samples[i].encoding;
      for (int r = 0; r < 16; ++r) {
        for (int f = 0; f < 4; ++f) {
          e.values[r * 4 + f] = plain.samples[i].encoding.at(p.mapping[r], f);
        }
      }
      return e;
    }());
  }
}

TEST_CASE("dataset round trip and corruption") {
  const auto game = make_game("tictactoe");
  Dataset ds;
  ds.header.game_id = "tictactoe";
  ds.header.tiles = 9;
  ds.header.features = 4;
  ds.header.generator_seed = 5;
  ds.header.iterations = 10;
  ds.header.exploration_c = 0.5f;
  ds.header.obfuscation_seed = 1234;
  ds.samples.push_back({game->encode_tiles(game->initial_state()), 1.0f});
  ds.samples.push_back({game->encode_tiles(game->apply_move(game->initial_state(), Move{4})), -1.0f});
  ds.header.sample_count = 2;
  write_dataset("dg_rt.bin", ds);
  const Dataset back = read_dataset("dg_rt.bin");
  CHECK(back.header == ds.header);
  CHECK(back.samples == ds.samples);

  const auto bytes = file_bytes("dg_rt.bin");
  auto write = [](const std::string& path, const std::vector<char>& b) {
    std::ofstream out(path, std::ios::binary);
    out.write(b.data(), static_cast<std::streamsize>(b.size()));
  };
  auto kind = [](const std::string& path) {
    try {
      read_dataset(path);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidArgument;
  };
  write("dg_trunc.bin", std::vector<char>(bytes.begin(), bytes.end() - 3));
  CHECK(kind("dg_trunc.bin") == ErrorKind::kCorruptDataset);
  auto magic = bytes;
  magic[0] = 'Y';
  write("dg_magic.bin", magic);
  CHECK(kind("dg_magic.bin") == ErrorKind::kCorruptDataset);
  write("dg_header.bin", std::vector<char>(bytes.begin(), bytes.begin() + 12));
  CHECK(kind("dg_header.bin") == ErrorKind::kCorruptDataset);
  auto extra = bytes;
  extra.push_back(1);
  write("dg_extra.bin", extra);
  CHECK(kind("dg_extra.bin") == ErrorKind::kCorruptDataset);
  CHECK(kind("dg_missing/none.bin") == ErrorKind::kIoFailure);
}

}
