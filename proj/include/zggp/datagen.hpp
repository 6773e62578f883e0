#pragma once

// Training data from MCTS-versus-MCTS games (no network in the loop).
//
// Dataset file, little-endian: "ZGGPDAT1", game id (u16 length + bytes),
// u32 T, u32 F, u64 sample count, u64 generator seed, u32 iterations,
// f32 exploration_c, u32 temperature plies, u8 obfuscation flag, u64
// obfuscation seed, then per sample T*F f32 values (row-major) and f32 z.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "zggp/game.hpp"
#include "zggp/mcts.hpp"
#include "zggp/neural/value_net.hpp"

namespace zggp {

// Fisher-Yates shuffle of 0..T-1 driven by a generator seeded with `seed`.
TilePermutation make_permutation(int tiles, std::uint64_t seed);

// One UCT-vs-UCT game in playout mode with tree reuse on both sides. The
// first `temperature_plies` moves are sampled proportionally to root visits,
// later moves are the robust child. Every non-terminal position is returned
// with z = final outcome for the player to move there.
std::vector<TrainingSample> play_training_game(
    const Game& game, const SearchConfig& search, int temperature_plies,
    std::uint64_t seed, const TilePermutation* obfuscation = nullptr);

struct DatasetHeader {
  std::string game_id;
  std::uint32_t tiles = 0;
  std::uint32_t features = 0;
  std::uint64_t sample_count = 0;
  std::uint64_t generator_seed = 0;
  std::uint32_t iterations = 0;
  float exploration_c = 0.0f;
  std::uint32_t temperature_plies = 0;
  std::optional<std::uint64_t> obfuscation_seed;

  friend bool operator==(const DatasetHeader&, const DatasetHeader&) = default;
};

struct Dataset {
  DatasetHeader header;
  std::vector<TrainingSample> samples;
};

struct GenerateOptions {
  int plays = 1;
  SearchConfig search;
  int temperature_plies = 4;
  int workers = 1;
  std::uint64_t base_seed = 0;
  std::optional<std::uint64_t> obfuscation_seed;
};

// Plays game i with seed base_seed + i on a worker pool and writes samples
// in game-index order, so the file is identical for any worker count.
// Throws IoFailure.
DatasetHeader generate_dataset(const Game& game, const GenerateOptions& options,
                               const std::string& path);

void write_dataset(const std::string& path, const Dataset& dataset);
// Throws IoFailure (cannot open) or CorruptDataset (bad magic, truncation,
// inconsistent sizes).
Dataset read_dataset(const std::string& path);
DatasetHeader read_dataset_header(const std::string& path);

}  // namespace zggp
