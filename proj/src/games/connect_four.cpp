#include "zggp/game.hpp"

namespace zggp {
namespace {

// Tile index = row * 7 + column, row 0 at the bottom. A move is a column.
constexpr int kRows = 6;
constexpr int kCols = 7;

class ConnectFour final : public Game {
 public:
  ConnectFour()
      : Game(GameSpec{"connect4", kRows * kCols, 4, GridDims{kRows, kCols},
                      kCols}) {}

  GameState initial_state() const override { return GameState{}; }

  void generate_moves(const GameState& state,
                      std::vector<Move>& out) const override {
    if (state.status != Status::kOngoing) return;
    for (int col = 0; col < kCols; ++col) {
      if (state.cells[(kRows - 1) * kCols + col] == kEmpty) {
        out.push_back(Move{col});
      }
    }
  }

  GameState apply_unchecked(const GameState& state, Move move) const override {
    GameState next = state;
    const std::int8_t piece = piece_of(state.to_move);
    const int col = move.id;
    int row = 0;
    while (next.cells[row * kCols + col] != kEmpty) ++row;
    next.cells[row * kCols + col] = piece;
    next.to_move = opponent(state.to_move);
    ++next.ply;
    if (makes_four(next, row, col, piece)) {
      next.status = piece == kP1Piece ? Status::kP1Won : Status::kP2Won;
    } else if (next.ply == kRows * kCols) {
      next.status = Status::kDraw;
    }
    return next;
  }

 private:
  static bool makes_four(const GameState& s, int row, int col,
                         std::int8_t piece) {
    static constexpr int kDirs[4][2] = {{0, 1}, {1, 0}, {1, 1}, {1, -1}};
    for (const auto& d : kDirs) {
      int count = 1;
      for (int sign : {1, -1}) {
        int r = row + sign * d[0];
        int c = col + sign * d[1];
        while (r >= 0 && r < kRows && c >= 0 && c < kCols &&
               s.cells[r * kCols + c] == piece) {
          ++count;
          r += sign * d[0];
          c += sign * d[1];
        }
      }
      if (count >= 4) return true;
    }
    return false;
  }
};

}  // namespace

std::unique_ptr<Game> make_connect_four() {
  return std::make_unique<ConnectFour>();
}

}  // namespace zggp
