#include "zggp/game.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "zggp/error.hpp"

namespace zggp {

TilePermutation TilePermutation::inverse() const {
  TilePermutation inv;
  inv.seed = seed;
  inv.mapping.resize(mapping.size());
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    inv.mapping[mapping[i]] = static_cast<int>(i);
  }
  return inv;
}

bool TilePermutation::is_bijection() const {
  std::vector<bool> seen(mapping.size(), false);
  for (int m : mapping) {
    if (m < 0 || m >= size() || seen[m]) return false;
    seen[m] = true;
  }
  return true;
}

Outcome outcome_of(Status status) {
  switch (status) {
    case Status::kP1Won: return {1.0};
    case Status::kP2Won: return {-1.0};
    default: return {0.0};
  }
}

std::vector<Move> Game::legal_moves(const GameState& state) const {
  std::vector<Move> moves;
  generate_moves(state, moves);
  return moves;
}

GameState Game::apply_move(const GameState& state, Move move) const {
  std::vector<Move> moves;
  generate_moves(state, moves);
  if (!std::binary_search(moves.begin(), moves.end(), move)) {
    throw Error(ErrorKind::kIllegalMove,
                spec_.name + ": move " + std::to_string(move.id) +
                    " is not legal at ply " + std::to_string(state.ply));
  }
  return apply_unchecked(state, move);
}

Outcome Game::terminal_payoff(const GameState& state) const {
  const Status status = terminal_status(state);
  if (status == Status::kOngoing) {
    throw Error(ErrorKind::kNotTerminal,
                spec_.name + ": terminal_payoff on a non-terminal state");
  }
  return outcome_of(status);
}

TileEncoding Game::encode_tiles(const GameState& state,
                                const TilePermutation* obfuscation) const {
  TileEncoding enc;
  enc.tiles = spec_.tile_count;
  enc.features = spec_.feature_dim;
  enc.values.resize(static_cast<std::size_t>(enc.tiles) * enc.features);
  encode_tiles_into(state, obfuscation, enc.values);
  return enc;
}

void Game::encode_tiles_into(const GameState& state,
                             const TilePermutation* obfuscation,
                             std::span<float> out) const {
  const int tiles = spec_.tile_count;
  const int features = spec_.feature_dim;
  if (obfuscation != nullptr && obfuscation->size() != tiles) {
    throw Error(ErrorKind::kPermutationMismatch,
                "permutation of length " +
                    std::to_string(obfuscation->size()) + " for " +
                    std::to_string(tiles) + " tiles");
  }
  const float to_move = state.to_move == Player::kP1 ? 1.0f : 0.0f;
  std::fill(out.begin(), out.end(), 0.0f);
  for (int row = 0; row < tiles; ++row) {
    const int tile = obfuscation ? obfuscation->mapping[row] : row;
    float* dst = out.data() + static_cast<std::size_t>(row) * features;
    dst[tile_content(state, tile)] = 1.0f;
    dst[features - 1] = to_move;
  }
}

Outcome Game::random_playout(const GameState& state, std::uint64_t seed) const {
  Rng rng(seed);
  return random_playout(state, rng);
}

Outcome Game::random_playout(const GameState& state, Rng& rng) const {
  GameState current = state;
  std::vector<Move> moves;
  while (true) {
    moves.clear();
    generate_moves(current, moves);
    if (moves.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
    current = apply_unchecked(current, moves[pick(rng)]);
  }
  return terminal_payoff(current);
}

std::string Game::move_to_string(Move move) const {
  return std::to_string(move.id);
}

std::string Game::render(const GameState& state) const {
  static constexpr char kGlyph[] = {'.', 'X', 'O'};
  std::ostringstream os;
  const auto& grid = spec_.grid;
  const int width = grid ? grid->width : spec_.tile_count;
  for (int t = 0; t < spec_.tile_count; ++t) {
    os << kGlyph[state.cells[t]];
    if ((t + 1) % width == 0) os << '\n';
  }
  return os.str();
}

namespace {

bool parse_sized(const std::string& id, std::string_view prefix, int& size) {
  if (id.size() <= prefix.size() || id.compare(0, prefix.size(), prefix) != 0) {
    return false;
  }
  const char* first = id.data() + prefix.size();
  const char* last = id.data() + id.size();
  auto [ptr, ec] = std::from_chars(first, last, size);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::shared_ptr<const Game> make_game(const std::string& id) {
  if (id == "tictactoe") return make_tictactoe();
  if (id == "connect4") return make_connect_four();
  if (id == "reversi") return make_reversi();
  int size = 0;
  if (parse_sized(id, "breakthrough-", size) && size >= 4 && size <= 10) {
    return make_breakthrough(size);
  }
  if (parse_sized(id, "hex-", size) && size >= 3 && size <= 11) {
    return make_hex(size);
  }
  throw Error(ErrorKind::kUnknownGame, "unknown game id '" + id + "'");
}

}  // namespace zggp
