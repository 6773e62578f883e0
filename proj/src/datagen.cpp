#include "zggp/datagen.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include "zggp/binary_io.hpp"
#include "zggp/error.hpp"
#include "zggp/worker_pool.hpp"

namespace zggp {
namespace {

constexpr char kMagic[9] = "ZGGPDAT1";

// Offset of the u64 sample count: magic, u16 id length, id, u32 T, u32 F.
std::streamoff count_offset(const std::string& game_id) {
  return 8 + 2 + static_cast<std::streamoff>(game_id.size()) + 4 + 4;
}

void write_header(std::ostream& out, const DatasetHeader& h) {
  out.write(kMagic, 8);
  binio::write_short_string(out, h.game_id);
  binio::write_int(out, h.tiles);
  binio::write_int(out, h.features);
  binio::write_int(out, h.sample_count);
  binio::write_int(out, h.generator_seed);
  binio::write_int(out, h.iterations);
  binio::write_f32(out, h.exploration_c);
  binio::write_int(out, h.temperature_plies);
  binio::write_int(out, static_cast<std::uint8_t>(h.obfuscation_seed ? 1 : 0));
  binio::write_int(out, h.obfuscation_seed.value_or(0));
}

void write_sample(std::ostream& out, const TrainingSample& s) {
  for (float v : s.encoding.values) binio::write_f32(out, v);
  binio::write_f32(out, s.target);
}

[[noreturn]] void corrupt(const std::string& path, const std::string& why) {
  throw Error(ErrorKind::kCorruptDataset, path + ": " + why);
}

DatasetHeader parse_header(std::istream& in, const std::string& path) {
  DatasetHeader h;
  if (!binio::read_magic(in, kMagic)) corrupt(path, "bad magic");
  std::uint8_t flag = 0;
  std::uint64_t obf = 0;
  const bool ok = binio::read_short_string(in, h.game_id) &&
                  binio::read_int(in, h.tiles) &&
                  binio::read_int(in, h.features) &&
                  binio::read_int(in, h.sample_count) &&
                  binio::read_int(in, h.generator_seed) &&
                  binio::read_int(in, h.iterations) &&
                  binio::read_f32(in, h.exploration_c) &&
                  binio::read_int(in, h.temperature_plies) &&
                  binio::read_int(in, flag) && binio::read_int(in, obf);
  if (!ok) corrupt(path, "truncated header");
  if (flag > 1) corrupt(path, "bad obfuscation flag");
  if (flag == 1) h.obfuscation_seed = obf;
  if (h.tiles == 0 || h.features == 0) corrupt(path, "empty tile shape");
  return h;
}

}  // namespace

TilePermutation make_permutation(int tiles, std::uint64_t seed) {
  if (tiles < 1) {
    throw Error(ErrorKind::kInvalidArgument, "permutation needs T >= 1");
  }
  TilePermutation perm;
  perm.seed = seed;
  perm.mapping.resize(tiles);
  std::iota(perm.mapping.begin(), perm.mapping.end(), 0);
  Rng rng(seed);
  for (int i = tiles - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(perm.mapping[i], perm.mapping[pick(rng)]);
  }
  return perm;
}

std::vector<TrainingSample> play_training_game(
    const Game& game, const SearchConfig& search, int temperature_plies,
    std::uint64_t seed, const TilePermutation* obfuscation) {
  if (search.eval_mode != EvalMode::kPlayout) {
    throw Error(ErrorKind::kInvalidArgument,
                "training games use playout-mode agents");
  }
  Rng rng(seed);
  GameState state = game.initial_state();
  // One tree per side; both follow every move.
  SearchTree trees[2] = {SearchTree(game, state), SearchTree(game, state)};
  std::vector<TrainingSample> samples;
  std::vector<Player> movers;

  while (!game.is_terminal(state)) {
    samples.push_back({game.encode_tiles(state, obfuscation), 0.0f});
    movers.push_back(state.to_move);
    SearchTree& own = trees[static_cast<int>(state.to_move)];
    SearchConfig cfg = search;
    cfg.rng_seed = rng();
    run_search(own, cfg);
    const Move move = state.ply < temperature_plies ? sample_by_visits(own, rng)
                                                    : best_move(own);
    for (auto& tree : trees) tree.advance(move);
    state = game.apply_unchecked(state, move);
  }
  const Outcome outcome = game.terminal_payoff(state);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].target = static_cast<float>(outcome.score_for(movers[i]));
  }
  return samples;
}

DatasetHeader generate_dataset(const Game& game, const GenerateOptions& options,
                               const std::string& path) {
  if (options.plays < 1) {
    throw Error(ErrorKind::kInvalidArgument, "plays must be >= 1");
  }
  std::optional<TilePermutation> perm;
  if (options.obfuscation_seed) {
    perm = make_permutation(game.tile_count(), *options.obfuscation_seed);
  }

  DatasetHeader header;
  header.game_id = game.name();
  header.tiles = static_cast<std::uint32_t>(game.tile_count());
  header.features = static_cast<std::uint32_t>(game.spec().feature_dim);
  header.generator_seed = options.base_seed;
  header.iterations = static_cast<std::uint32_t>(options.search.iterations);
  header.exploration_c = static_cast<float>(options.search.exploration_c);
  header.temperature_plies = static_cast<std::uint32_t>(options.temperature_plies);
  header.obfuscation_seed = options.obfuscation_seed;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot write " + path);
  write_header(out, header);

  ordered_parallel_for(
      static_cast<std::size_t>(options.plays), options.workers,
      [&](std::size_t i) {
        return play_training_game(game, options.search,
                                  options.temperature_plies,
                                  options.base_seed + i,
                                  perm ? &*perm : nullptr);
      },
      [&](std::size_t, std::vector<TrainingSample> samples) {
        for (const auto& s : samples) write_sample(out, s);
        header.sample_count += samples.size();
      });

  out.seekp(count_offset(header.game_id));
  binio::write_int(out, header.sample_count);
  out.flush();
  if (!out) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
  return header;
}

void write_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIoFailure, "cannot write " + path);
  DatasetHeader header = dataset.header;
  header.sample_count = dataset.samples.size();
  write_header(out, header);
  for (const auto& s : dataset.samples) write_sample(out, s);
  out.flush();
  if (!out) throw Error(ErrorKind::kIoFailure, "write failed for " + path);
}

DatasetHeader read_dataset_header(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  return parse_header(in, path);
}

Dataset read_dataset(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIoFailure, "cannot open " + path);
  Dataset ds;
  ds.header = parse_header(in, path);
  const std::size_t width =
      static_cast<std::size_t>(ds.header.tiles) * ds.header.features;
  // Bound the reservation by what the file can actually hold.
  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
  in.seekg(here);
  const std::uint64_t record_bytes = 4 * (width + 1);
  if (remaining != ds.header.sample_count * record_bytes) {
    corrupt(path, "sample count does not match the records present");
  }
  ds.samples.resize(ds.header.sample_count);
  std::vector<char> raw(record_bytes);
  for (auto& s : ds.samples) {
    if (!in.read(raw.data(), static_cast<std::streamsize>(record_bytes))) {
      corrupt(path, "truncated sample");
    }
    s.encoding.tiles = static_cast<int>(ds.header.tiles);
    s.encoding.features = static_cast<int>(ds.header.features);
    s.encoding.values.resize(width);
    for (std::size_t j = 0; j < width; ++j) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(
                    static_cast<unsigned char>(raw[4 * j + b]))
                << (8 * b);
      }
      s.encoding.values[j] = std::bit_cast<float>(bits);
    }
    std::uint32_t zbits = 0;
    for (int b = 0; b < 4; ++b) {
      zbits |= static_cast<std::uint32_t>(
                   static_cast<unsigned char>(raw[4 * width + b]))
               << (8 * b);
    }
    s.target = std::bit_cast<float>(zbits);
  }
  return ds;
}

}  // namespace zggp
