#include <bit>
#include <cstdint>
#include <string>

#include "zggp/game.hpp"

namespace zggp {
namespace {

// Tile index = row * N + column. P1 starts on rows 0-1 and moves toward
// row N-1; P2 starts on rows N-2..N-1 and moves toward row 0.
// Move id = from * 3 + k with k = 0 (toward column - 1), 1 (straight),
// 2 (toward column + 1).
class Breakthrough final : public Game {
 public:
  explicit Breakthrough(int n)
      : Game(GameSpec{"breakthrough-" + std::to_string(n), n * n, 4,
                      GridDims{n, n}, 3 * n * n}),
        n_(n) {}

  GameState initial_state() const override {
    GameState s;
    for (int t = 0; t < 2 * n_; ++t) s.cells[t] = kP1Piece;
    for (int t = n_ * (n_ - 2); t < n_ * n_; ++t) s.cells[t] = kP2Piece;
    return s;
  }

  void generate_moves(const GameState& state,
                      std::vector<Move>& out) const override {
    if (state.status != Status::kOngoing) return;
    const std::int8_t own = piece_of(state.to_move);
    const int dr = state.to_move == Player::kP1 ? 1 : -1;
    for (int from = 0; from < n_ * n_; ++from) {
      if (state.cells[from] != own) continue;
      const int row = from / n_ + dr;
      if (row < 0 || row >= n_) continue;
      const int col = from % n_;
      for (int k = 0; k < 3; ++k) {
        const int c = col + k - 1;
        if (c < 0 || c >= n_) continue;
        const std::int8_t target = state.cells[row * n_ + c];
        const bool ok = k == 1 ? target == kEmpty : target != own;
        if (ok) out.push_back(Move{from * 3 + k});
      }
    }
  }

  GameState apply_unchecked(const GameState& state, Move move) const override {
    GameState next = state;
    const int from = move.id / 3;
    const int k = move.id % 3;
    const int dr = state.to_move == Player::kP1 ? 1 : -1;
    const int to = (from / n_ + dr) * n_ + from % n_ + k - 1;
    const std::int8_t own = piece_of(state.to_move);
    next.cells[from] = kEmpty;
    next.cells[to] = own;
    next.to_move = opponent(state.to_move);
    ++next.ply;
    const Status mover_wins =
        own == kP1Piece ? Status::kP1Won : Status::kP2Won;
    const int goal_row = own == kP1Piece ? n_ - 1 : 0;
    if (to / n_ == goal_row) {
      next.status = mover_wins;
      return next;
    }
    const std::int8_t theirs = piece_of(next.to_move);
    bool any = false;
    for (int t = 0; t < n_ * n_ && !any; ++t) any = next.cells[t] == theirs;
    if (!any) next.status = mover_wins;
    return next;
  }

  Outcome random_playout(const GameState& state, Rng& rng) const override {
    if (n_ > 8) return Game::random_playout(state, rng);
    return bitboard_playout(state, rng);
  }

  std::string move_to_string(Move move) const override {
    const int from = move.id / 3;
    static constexpr const char* kDir[] = {"<", "^", ">"};
    return std::string(1, static_cast<char>('a' + from % n_)) +
           std::to_string(from / n_ + 1) + kDir[move.id % 3];
  }

 protected:
  Status terminal_status(const GameState& state) const override {
    if (state.status != Status::kOngoing) return state.status;
    return has_move(state) ? Status::kOngoing
           : state.to_move == Player::kP1 ? Status::kP2Won
                                          : Status::kP1Won;
  }

 private:
  bool has_move(const GameState& state) const {
    const std::int8_t own = piece_of(state.to_move);
    const int dr = state.to_move == Player::kP1 ? 1 : -1;
    for (int from = 0; from < n_ * n_; ++from) {
      if (state.cells[from] != own) continue;
      const int row = from / n_ + dr;
      if (row < 0 || row >= n_) continue;
      const int col = from % n_;
      for (int k = 0; k < 3; ++k) {
        const int c = col + k - 1;
        if (c < 0 || c >= n_) continue;
        const std::int8_t target = state.cells[row * n_ + c];
        if (k == 1 ? target == kEmpty : target != own) return true;
      }
    }
    return false;
  }

  static int nth_set_bit(std::uint64_t bits, int n) {
    for (int i = 0; i < n; ++i) bits &= bits - 1;
    return std::countr_zero(bits);
  }

  Outcome bitboard_playout(const GameState& state, Rng& rng) const {
    const Status status = terminal_status(state);
    if (status != Status::kOngoing) return outcome_of(status);

    const int tiles = n_ * n_;
    const std::uint64_t full =
        tiles == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << tiles) - 1;
    std::uint64_t first_col = 0;
    std::uint64_t last_col = 0;
    for (int r = 0; r < n_; ++r) {
      first_col |= std::uint64_t{1} << (r * n_);
      last_col |= std::uint64_t{1} << (r * n_ + n_ - 1);
    }
    const std::uint64_t top_row = full & ~(full >> n_);
    const std::uint64_t bottom_row = full & ~(full << n_);

    std::uint64_t bb[2] = {0, 0};
    for (int t = 0; t < tiles; ++t) {
      if (state.cells[t] == kP1Piece) bb[0] |= std::uint64_t{1} << t;
      if (state.cells[t] == kP2Piece) bb[1] |= std::uint64_t{1} << t;
    }
    int side = state.to_move == Player::kP1 ? 0 : 1;
    const int n = n_;

    while (true) {
      const std::uint64_t own = bb[side];
      const std::uint64_t empty = full & ~(bb[0] | bb[1]);
      std::uint64_t targets[3];
      int shift[3];  // target = from + shift
      if (side == 0) {
        targets[0] = ((own & ~first_col) << (n - 1)) & full & ~own;
        targets[1] = (own << n) & empty;
        targets[2] = ((own & ~last_col) << (n + 1)) & full & ~own;
        shift[0] = n - 1;
        shift[1] = n;
        shift[2] = n + 1;
      } else {
        targets[0] = ((own & ~first_col) >> (n + 1)) & ~own;
        targets[1] = (own >> n) & empty;
        targets[2] = ((own & ~last_col) >> (n - 1)) & ~own;
        shift[0] = -(n + 1);
        shift[1] = -n;
        shift[2] = -(n - 1);
      }
      const int counts[3] = {std::popcount(targets[0]),
                             std::popcount(targets[1]),
                             std::popcount(targets[2])};
      const int total = counts[0] + counts[1] + counts[2];
      if (total == 0) return {side == 0 ? -1.0 : 1.0};
      std::uniform_int_distribution<int> pick(0, total - 1);
      int r = pick(rng);
      int kind = 0;
      while (r >= counts[kind]) r -= counts[kind++];
      const int to = nth_set_bit(targets[kind], r);
      const int from = to - shift[kind];
      const std::uint64_t to_bit = std::uint64_t{1} << to;
      bb[side] = (own & ~(std::uint64_t{1} << from)) | to_bit;
      bb[1 - side] &= ~to_bit;
      const std::uint64_t goal = side == 0 ? top_row : bottom_row;
      if ((to_bit & goal) != 0 || bb[1 - side] == 0) {
        return {side == 0 ? 1.0 : -1.0};
      }
      side = 1 - side;
    }
  }

  int n_;
};

}  // namespace

std::unique_ptr<Game> make_breakthrough(int size) {
  return std::make_unique<Breakthrough>(size);
}

}  // namespace zggp
