#pragma once

// Uniform interface for two-player, zero-sum, perfect-information games and
// the per-tile feature encoding consumed by the value networks.

#include <array>
#include <compare>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace zggp {

using Rng = std::mt19937_64;

enum class Player : std::uint8_t { kP1 = 0, kP2 = 1 };

constexpr Player opponent(Player p) {
  return p == Player::kP1 ? Player::kP2 : Player::kP1;
}

// Index into a game-specific move universe. Only meaningful together with the
// state whose legal-move list produced it.
struct Move {
  std::int32_t id = 0;
  friend constexpr auto operator<=>(const Move&, const Move&) = default;
};

// Largest board among the supported games (hex-11).
inline constexpr int kMaxTiles = 121;

// Cell contents shared by every game: 0 empty, 1 owned by P1, 2 owned by P2.
inline constexpr std::int8_t kEmpty = 0;
inline constexpr std::int8_t kP1Piece = 1;
inline constexpr std::int8_t kP2Piece = 2;

constexpr std::int8_t piece_of(Player p) {
  return p == Player::kP1 ? kP1Piece : kP2Piece;
}

enum class Status : std::uint8_t { kOngoing, kP1Won, kP2Won, kDraw };

// Immutable position value. Games interpret `cells` and the auxiliary fields;
// the struct is trivially copyable so states can be shared across workers.
struct GameState {
  std::array<std::int8_t, kMaxTiles> cells{};
  Player to_move = Player::kP1;
  std::int32_t ply = 0;
  Status status = Status::kOngoing;
  // Consecutive passes (Reversi only).
  std::uint8_t passes = 0;

  friend bool operator==(const GameState&, const GameState&) = default;
};

struct GridDims {
  int height = 0;
  int width = 0;
};

struct GameSpec {
  std::string name;
  int tile_count = 0;
  // Distinct tile contents plus the player-to-move plane.
  int feature_dim = 0;
  std::optional<GridDims> grid;
  // Bound on the number of distinct move ids (for sizing buffers).
  int move_universe = 0;
};

struct Outcome {
  double score_p1 = 0.0;

  double score_p2() const { return -score_p1; }
  double score_for(Player p) const {
    return p == Player::kP1 ? score_p1 : -score_p1;
  }
  friend bool operator==(const Outcome&, const Outcome&) = default;
};

// Bijection from input slot to board tile: slot i carries tile mapping[i].
struct TilePermutation {
  std::vector<int> mapping;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(mapping.size()); }
  TilePermutation inverse() const;
  bool is_bijection() const;
};

// T rows by F columns of {0, 1}: one-hot tile content then the
// player-to-move plane (1 when P1 is to move).
struct TileEncoding {
  int tiles = 0;
  int features = 0;
  std::vector<float> values;

  float at(int row, int col) const { return values[row * features + col]; }
  std::span<const float> row(int r) const {
    return {values.data() + static_cast<std::size_t>(r) * features,
            static_cast<std::size_t>(features)};
  }
  friend bool operator==(const TileEncoding&, const TileEncoding&) = default;
};

class Game {
 public:
  explicit Game(GameSpec spec) : spec_(std::move(spec)) {}
  virtual ~Game() = default;

  Game(const Game&) = delete;
  Game& operator=(const Game&) = delete;

  const GameSpec& spec() const { return spec_; }
  const std::string& name() const { return spec_.name; }
  int tile_count() const { return spec_.tile_count; }

  virtual GameState initial_state() const = 0;

  // Ascending move-id order; empty iff the state is terminal.
  std::vector<Move> legal_moves(const GameState& state) const;
  virtual void generate_moves(const GameState& state,
                              std::vector<Move>& out) const = 0;

  bool is_terminal(const GameState& state) const {
    return terminal_status(state) != Status::kOngoing;
  }

  // Throws IllegalMove if `move` is not in legal_moves(state).
  GameState apply_move(const GameState& state, Move move) const;
  // Precondition: `move` is legal in `state`. Used on hot paths where
  // legality is guaranteed by construction.
  virtual GameState apply_unchecked(const GameState& state, Move move) const = 0;

  // Throws NotTerminal on a non-terminal state.
  Outcome terminal_payoff(const GameState& state) const;

  // Throws PermutationMismatch if the permutation length differs from T.
  TileEncoding encode_tiles(const GameState& state,
                            const TilePermutation* obfuscation = nullptr) const;
  // Writes the encoding into a caller-owned T*F buffer.
  void encode_tiles_into(const GameState& state,
                         const TilePermutation* obfuscation,
                         std::span<float> out) const;

  Outcome random_playout(const GameState& state, std::uint64_t seed) const;
  // Uniformly random legal moves until terminal, drawing from `rng`.
  virtual Outcome random_playout(const GameState& state, Rng& rng) const;

  virtual std::string move_to_string(Move move) const;
  virtual std::string render(const GameState& state) const;

  // Content class of a tile in [0, F-1).
  virtual int tile_content(const GameState& state, int tile) const {
    return state.cells[tile];
  }

 protected:
  // Terminal classification. Games cache decisive results in state.status
  // at apply time; this hook handles rules that need a movegen look-ahead.
  virtual Status terminal_status(const GameState& state) const {
    return state.status;
  }

 private:
  GameSpec spec_;
};

Outcome outcome_of(Status status);

// Recognized ids: tictactoe, connect4, breakthrough-N (4..10), hex-N (3..11),
// reversi. Throws UnknownGame otherwise.
std::shared_ptr<const Game> make_game(const std::string& id);

std::unique_ptr<Game> make_tictactoe();
std::unique_ptr<Game> make_connect_four();
std::unique_ptr<Game> make_breakthrough(int size);
std::unique_ptr<Game> make_hex(int size);
std::unique_ptr<Game> make_reversi();

}  // namespace zggp
