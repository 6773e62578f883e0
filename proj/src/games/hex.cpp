#include <algorithm>
#include <string>

#include "zggp/game.hpp"

namespace zggp {
namespace {

// Rhombic N x N board, tile = row * N + column. P1 joins row 0 to row N-1,
// P2 joins column 0 to column N-1. No swap rule.
class Hex final : public Game {
 public:
  explicit Hex(int n)
      : Game(GameSpec{"hex-" + std::to_string(n), n * n, 4, GridDims{n, n},
                      n * n}),
        n_(n) {}

  GameState initial_state() const override { return GameState{}; }

  void generate_moves(const GameState& state,
                      std::vector<Move>& out) const override {
    if (state.status != Status::kOngoing) return;
    for (int t = 0; t < n_ * n_; ++t) {
      if (state.cells[t] == kEmpty) out.push_back(Move{t});
    }
  }

  GameState apply_unchecked(const GameState& state, Move move) const override {
    GameState next = state;
    const std::int8_t piece = piece_of(state.to_move);
    next.cells[move.id] = piece;
    next.to_move = opponent(state.to_move);
    ++next.ply;
    if (connects(next, move.id, piece)) {
      next.status = piece == kP1Piece ? Status::kP1Won : Status::kP2Won;
    }
    return next;
  }

  // Filling the remaining cells in uniformly random order and reading off
  // the winner is equivalent to stopping at the first connection: exactly
  // one player is connected on a full board and later stones cannot break
  // an existing chain.
  Outcome random_playout(const GameState& state, Rng& rng) const override {
    if (state.status != Status::kOngoing) return outcome_of(state.status);
    GameState board = state;
    std::vector<int> empties;
    for (int t = 0; t < n_ * n_; ++t) {
      if (board.cells[t] == kEmpty) empties.push_back(t);
    }
    std::shuffle(empties.begin(), empties.end(), rng);
    std::int8_t piece = piece_of(state.to_move);
    for (int t : empties) {
      board.cells[t] = piece;
      piece = piece == kP1Piece ? kP2Piece : kP1Piece;
    }
    return {p1_connected(board) ? 1.0 : -1.0};
  }

  std::string move_to_string(Move move) const override {
    return std::string(1, static_cast<char>('a' + move.id % n_)) +
           std::to_string(move.id / n_ + 1);
  }

 private:
  template <typename Visit>
  void for_neighbors(int tile, Visit&& visit) const {
    static constexpr int kDr[6] = {-1, -1, 0, 0, 1, 1};
    static constexpr int kDc[6] = {0, 1, -1, 1, -1, 0};
    const int r = tile / n_;
    const int c = tile % n_;
    for (int i = 0; i < 6; ++i) {
      const int rr = r + kDr[i];
      const int cc = c + kDc[i];
      if (rr >= 0 && rr < n_ && cc >= 0 && cc < n_) visit(rr * n_ + cc);
    }
  }

  bool touches_start(int tile, std::int8_t piece) const {
    return piece == kP1Piece ? tile / n_ == 0 : tile % n_ == 0;
  }
  bool touches_end(int tile, std::int8_t piece) const {
    return piece == kP1Piece ? tile / n_ == n_ - 1 : tile % n_ == n_ - 1;
  }

  // Flood fill from the placed stone.
  bool connects(const GameState& s, int origin, std::int8_t piece) const {
    std::array<bool, kMaxTiles> seen{};
    std::array<int, kMaxTiles> stack{};
    int top = 0;
    stack[top++] = origin;
    seen[origin] = true;
    bool start = false;
    bool end = false;
    while (top > 0) {
      const int t = stack[--top];
      start = start || touches_start(t, piece);
      end = end || touches_end(t, piece);
      if (start && end) return true;
      for_neighbors(t, [&](int nb) {
        if (!seen[nb] && s.cells[nb] == piece) {
          seen[nb] = true;
          stack[top++] = nb;
        }
      });
    }
    return false;
  }

  bool p1_connected(const GameState& s) const {
    std::array<bool, kMaxTiles> seen{};
    std::array<int, kMaxTiles> stack{};
    int top = 0;
    for (int c = 0; c < n_; ++c) {
      if (s.cells[c] == kP1Piece) {
        seen[c] = true;
        stack[top++] = c;
      }
    }
    while (top > 0) {
      const int t = stack[--top];
      if (t / n_ == n_ - 1) return true;
      for_neighbors(t, [&](int nb) {
        if (!seen[nb] && s.cells[nb] == kP1Piece) {
          seen[nb] = true;
          stack[top++] = nb;
        }
      });
    }
    return false;
  }

  int n_;
};

}  // namespace

std::unique_ptr<Game> make_hex(int size) { return std::make_unique<Hex>(size); }

}  // namespace zggp
