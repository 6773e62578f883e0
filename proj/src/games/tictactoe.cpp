#include <array>

#include "zggp/game.hpp"

namespace zggp {
namespace {

constexpr std::array<std::array<int, 3>, 8> kLines = {{
    {0, 1, 2}, {3, 4, 5}, {6, 7, 8},
    {0, 3, 6}, {1, 4, 7}, {2, 5, 8},
    {0, 4, 8}, {2, 4, 6},
}};

class TicTacToe final : public Game {
 public:
  TicTacToe() : Game(GameSpec{"tictactoe", 9, 4, GridDims{3, 3}, 9}) {}

  GameState initial_state() const override { return GameState{}; }

  void generate_moves(const GameState& state,
                      std::vector<Move>& out) const override {
    if (state.status != Status::kOngoing) return;
    for (int cell = 0; cell < 9; ++cell) {
      if (state.cells[cell] == kEmpty) out.push_back(Move{cell});
    }
  }

  GameState apply_unchecked(const GameState& state, Move move) const override {
    GameState next = state;
    const std::int8_t piece = piece_of(state.to_move);
    next.cells[move.id] = piece;
    next.to_move = opponent(state.to_move);
    ++next.ply;
    for (const auto& line : kLines) {
      if (next.cells[line[0]] == piece && next.cells[line[1]] == piece &&
          next.cells[line[2]] == piece) {
        next.status = piece == kP1Piece ? Status::kP1Won : Status::kP2Won;
        return next;
      }
    }
    if (next.ply == 9) next.status = Status::kDraw;
    return next;
  }
};

}  // namespace

std::unique_ptr<Game> make_tictactoe() { return std::make_unique<TicTacToe>(); }

}  // namespace zggp
