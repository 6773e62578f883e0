#include <string>

#include "zggp/game.hpp"

namespace zggp {
namespace {

// 8x8 board, tile = row * 8 + column where row 0 is rank 1 and column 0 is
// file a. P1 is Black and moves first. Move 64 is the pass move, legal only
// when no placement flips a disc.
constexpr int kSide = 8;
constexpr int kTiles = kSide * kSide;
constexpr int kPass = kTiles;

constexpr int kDirs[8][2] = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1},
                             {0, 1},   {1, -1}, {1, 0},  {1, 1}};

class Reversi final : public Game {
 public:
  Reversi() : Game(GameSpec{"reversi", kTiles, 4, GridDims{kSide, kSide},
                            kTiles + 1}) {}

  GameState initial_state() const override {
    GameState s;
    s.cells[3 * kSide + 3] = kP2Piece;  // d4
    s.cells[4 * kSide + 4] = kP2Piece;  // e5
    s.cells[4 * kSide + 3] = kP1Piece;  // d5
    s.cells[3 * kSide + 4] = kP1Piece;  // e4
    return s;
  }

  void generate_moves(const GameState& state,
                      std::vector<Move>& out) const override {
    if (state.status != Status::kOngoing) return;
    const std::int8_t own = piece_of(state.to_move);
    const std::size_t before = out.size();
    for (int t = 0; t < kTiles; ++t) {
      if (state.cells[t] == kEmpty && flips_any(state, t, own)) {
        out.push_back(Move{t});
      }
    }
    if (out.size() == before) out.push_back(Move{kPass});
  }

  GameState apply_unchecked(const GameState& state, Move move) const override {
    GameState next = state;
    next.to_move = opponent(state.to_move);
    ++next.ply;
    if (move.id == kPass) {
      ++next.passes;
      if (next.passes >= 2) next.status = final_status(next);
      return next;
    }
    next.passes = 0;
    const std::int8_t own = piece_of(state.to_move);
    const int r0 = move.id / kSide;
    const int c0 = move.id % kSide;
    next.cells[move.id] = own;
    for (const auto& d : kDirs) {
      const int run = flip_run(state, r0, c0, d[0], d[1], own);
      for (int i = 1; i <= run; ++i) {
        next.cells[(r0 + i * d[0]) * kSide + c0 + i * d[1]] = own;
      }
    }
    bool full = true;
    for (int t = 0; t < kTiles && full; ++t) full = next.cells[t] != kEmpty;
    if (full) next.status = final_status(next);
    return next;
  }

  std::string move_to_string(Move move) const override {
    if (move.id == kPass) return "pass";
    return std::string(1, static_cast<char>('a' + move.id % kSide)) +
           std::to_string(move.id / kSide + 1);
  }

 private:
  // Number of opponent discs bracketed in direction (dr, dc); 0 if none.
  static int flip_run(const GameState& s, int r0, int c0, int dr, int dc,
                      std::int8_t own) {
    int r = r0 + dr;
    int c = c0 + dc;
    int run = 0;
    while (r >= 0 && r < kSide && c >= 0 && c < kSide) {
      const std::int8_t cell = s.cells[r * kSide + c];
      if (cell == kEmpty) return 0;
      if (cell == own) return run;
      ++run;
      r += dr;
      c += dc;
    }
    return 0;
  }

  static bool flips_any(const GameState& s, int tile, std::int8_t own) {
    const int r0 = tile / kSide;
    const int c0 = tile % kSide;
    for (const auto& d : kDirs) {
      if (flip_run(s, r0, c0, d[0], d[1], own) > 0) return true;
    }
    return false;
  }

  static Status final_status(const GameState& s) {
    int black = 0;
    int white = 0;
    for (int t = 0; t < kTiles; ++t) {
      black += s.cells[t] == kP1Piece;
      white += s.cells[t] == kP2Piece;
    }
    if (black > white) return Status::kP1Won;
    if (white > black) return Status::kP2Won;
    return Status::kDraw;
  }
};

}  // namespace

std::unique_ptr<Game> make_reversi() { return std::make_unique<Reversi>(); }

}  // namespace zggp
