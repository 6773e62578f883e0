#include <doctest.h>

#include <algorithm>
#include <set>

#include "oracles.hpp"
#include "zggp/datagen.hpp"
#include "zggp/error.hpp"
#include "zggp/game.hpp"

using namespace zggp;

namespace {

const std::vector<std::string> kAllGames = {
    "tictactoe", "connect4", "reversi", "breakthrough-4", "breakthrough-6",
    "breakthrough-8", "breakthrough-10", "hex-3", "hex-5", "hex-11"};

std::vector<int> ids(const std::vector<Move>& moves) {
  std::vector<int> out;
  for (Move m : moves) out.push_back(m.id);
  return out;
}

long perft(const Game& game, const GameState& s, int depth) {
  if (depth == 0 || game.is_terminal(s)) return 1;
  long n = 0;
  for (Move m : game.legal_moves(s)) n += perft(game, game.apply_move(s, m), depth - 1);
  return n;
}

// Plays uniformly random moves through the public interface and checks per
// state invariants along the way. Returns the number of plies.
int checked_random_game(const Game& game, std::uint64_t seed) {
  Rng rng(seed);
  GameState s = game.initial_state();
  while (true) {
    const auto moves = game.legal_moves(s);
    CHECK(game.is_terminal(s) != !moves.empty());
    CHECK(game.legal_moves(s) == moves);
    CHECK(game.encode_tiles(s) == game.encode_tiles(s));
    CHECK(std::is_sorted(moves.begin(), moves.end()));
    if (moves.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
    s = game.apply_move(s, moves[pick(rng)]);
  }
  const Outcome o = game.terminal_payoff(s);
  CHECK(o.score_p1 + o.score_p2() == 0.0);
  CHECK((o.score_p1 == 1.0 || o.score_p1 == 0.0 || o.score_p1 == -1.0));
  return s.ply;
}

}  // namespace

TEST_SUITE("game") {

TEST_CASE("players alternate") {
  CHECK(opponent(opponent(Player::kP1)) == Player::kP1);
  CHECK(opponent(Player::kP1) == Player::kP2);
}

TEST_CASE("game ids") {
  for (const auto& id : kAllGames) CHECK(make_game(id)->name() == id);
  for (const char* bad : {"chess", "hex-2", "hex-12", "breakthrough-3",
                          "breakthrough-11", "hex-", "hex-5x", "Tictactoe"}) {
    try {
      make_game(bad);
      FAIL("accepted " << bad);
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kUnknownGame);
    }
  }
}

TEST_CASE("initial move counts") {
  CHECK(make_game("tictactoe")->legal_moves(make_game("tictactoe")->initial_state()).size() == 9);
  const auto c4 = make_game("connect4");
  CHECK(c4->legal_moves(c4->initial_state()).size() == 7);
  const auto hex = make_game("hex-5");
  CHECK(hex->legal_moves(hex->initial_state()).size() == 25);
  for (int n = 4; n <= 10; ++n) {
    const auto bt = make_breakthrough(n);
    CHECK(static_cast<int>(bt->legal_moves(bt->initial_state()).size()) ==
          oracle::breakthrough_initial_moves(n));
  }
  CHECK(oracle::breakthrough_initial_moves(6) == 16);
  CHECK(oracle::breakthrough_initial_moves(8) == 22);
}

TEST_CASE("reversi opening") {
  const auto game = make_game("reversi");
  const GameState s = game->initial_state();
  // d3, c4, f5, e6.
  CHECK(ids(game->legal_moves(s)) == std::vector<int>{19, 26, 37, 44});
  std::vector<std::string> names;
  for (Move m : game->legal_moves(s)) names.push_back(game->move_to_string(m));
  CHECK(names == std::vector<std::string>{"d3", "c4", "f5", "e6"});
  const GameState after = game->apply_move(s, Move{19});
  CHECK(after.cells[19] == kP1Piece);
  CHECK(after.cells[27] == kP1Piece);  // d4 flipped
  CHECK(after.cells[36] == kP2Piece);
  CHECK(after.to_move == Player::kP2);
}

TEST_CASE("reversi perft") {
  const auto game = make_game("reversi");
  const long expected[] = {1, 4, 12, 56, 244, 1396, 8200, 55092};
  for (int d = 0; d <= 7; ++d) {
    CHECK(perft(*game, game->initial_state(), d) == expected[d]);
  }
}

TEST_CASE("reversi pass and end") {
  const auto game = make_game("reversi");
  GameState s;
  // Black has one disc, white surrounds nothing: neither side can flip.
  s.cells[0] = kP1Piece;
  s.cells[63] = kP2Piece;
  CHECK(ids(game->legal_moves(s)) == std::vector<int>{64});
  CHECK(game->move_to_string(Move{64}) == "pass");
  const GameState one = game->apply_move(s, Move{64});
  CHECK_FALSE(game->is_terminal(one));
  const GameState two = game->apply_move(one, Move{64});
  CHECK(game->is_terminal(two));
  CHECK(game->terminal_payoff(two).score_p1 == 0.0);
  s.cells[1] = kP1Piece;
  const GameState won =
      game->apply_move(game->apply_move(s, Move{64}), Move{64});
  CHECK(game->terminal_payoff(won).score_p1 == 1.0);
}

TEST_CASE("connect four perft") {
  const auto game = make_game("connect4");
  long expected = 1;
  for (int d = 0; d <= 6; ++d) {
    CHECK(perft(*game, game->initial_state(), d) == expected);
    expected *= 7;
  }
}

TEST_CASE("tic-tac-toe game tree") {
  const auto game = make_game("tictactoe");
  CHECK(perft(*game, game->initial_state(), 9) == 255168);
  CHECK(oracle::ttt_count_games({}) == 255168);
}

TEST_CASE("terminal payoffs") {
  const auto ttt = make_game("tictactoe");
  GameState s = ttt->initial_state();
  for (int m : {0, 3, 1, 4, 2}) s = ttt->apply_move(s, Move{m});
  CHECK(ttt->is_terminal(s));
  CHECK(ttt->terminal_payoff(s).score_p1 == 1.0);
  CHECK(ttt->terminal_payoff(s).score_for(Player::kP2) == -1.0);
  CHECK(ttt->legal_moves(s).empty());
  CHECK(ttt->random_playout(s, 5).score_p1 == 1.0);

  GameState draw = ttt->initial_state();
  for (int m : {0, 1, 2, 4, 3, 5, 7, 6, 8}) draw = ttt->apply_move(draw, Move{m});
  CHECK(ttt->terminal_payoff(draw).score_p1 == 0.0);

  const auto c4 = make_game("connect4");
  GameState c = c4->initial_state();
  for (int m : {0, 1, 0, 1, 0, 1}) c = c4->apply_move(c, Move{m});
  CHECK_FALSE(c4->is_terminal(c));
  c = c4->apply_move(c, Move{0});
  CHECK(c4->terminal_payoff(c).score_p1 == 1.0);
  // Tile layout: row 0 at the bottom, tile = row * 7 + column.
  CHECK(c.cells[0] == kP1Piece);
  CHECK(c.cells[21] == kP1Piece);
  CHECK(c.cells[1] == kP2Piece);

  const auto hex = make_game("hex-3");
  GameState h = hex->initial_state();
  for (int m : {0, 2, 3, 5}) h = hex->apply_move(h, Move{m});
  CHECK_FALSE(hex->is_terminal(h));
  h = hex->apply_move(h, Move{6});
  CHECK(hex->terminal_payoff(h).score_p1 == 1.0);
  // A chain along the (r+1, c-1) diagonal connects in Hex.
  GameState d = hex->initial_state();
  for (int m : {2, 0, 4, 1, 6}) d = hex->apply_move(d, Move{m});
  CHECK(hex->terminal_payoff(d).score_p1 == 1.0);
  // P2 joins the left and right edges.
  GameState p2 = hex->initial_state();
  for (int m : {0, 3, 1, 4, 8, 5}) p2 = hex->apply_move(p2, Move{m});
  CHECK(hex->terminal_payoff(p2).score_p1 == -1.0);
}

TEST_CASE("breakthrough rules") {
  const auto bt = make_game("breakthrough-4");
  GameState s;
  // P1 pawn one step from the goal row; P2 pawn far away.
  s.cells[2 * 4 + 1] = kP1Piece;
  s.cells[0 * 4 + 3] = kP2Piece;
  const auto moves = bt->legal_moves(s);
  CHECK(moves.size() == 3);
  const GameState won = bt->apply_move(s, moves[1]);
  CHECK(bt->terminal_payoff(won).score_p1 == 1.0);

  // Capturing the last enemy pawn wins.
  GameState cap;
  cap.cells[1 * 4 + 1] = kP1Piece;
  cap.cells[2 * 4 + 2] = kP2Piece;
  cap.cells[0 * 4 + 0] = kP1Piece;
  bool found = false;
  for (Move m : bt->legal_moves(cap)) {
    const GameState next = bt->apply_move(cap, m);
    if (next.cells[2 * 4 + 2] == kP1Piece) {
      found = true;
      CHECK(bt->terminal_payoff(next).score_p1 == 1.0);
    }
  }
  CHECK(found);

  // Straight moves cannot capture.
  GameState blocked;
  blocked.cells[1 * 4 + 0] = kP1Piece;
  blocked.cells[2 * 4 + 0] = kP2Piece;
  blocked.cells[2 * 4 + 1] = kP2Piece;
  blocked.cells[3 * 4 + 3] = kP2Piece;
  const auto bm = bt->legal_moves(blocked);
  REQUIRE(bm.size() == 1);
  const GameState took = bt->apply_move(blocked, bm[0]);
  CHECK(took.cells[2 * 4 + 1] == kP1Piece);
  CHECK(took.cells[1 * 4 + 0] == kEmpty);
  CHECK(took.cells[2 * 4 + 0] == kP2Piece);

  // P2 moves toward row 0 and wins on reaching it.
  GameState down;
  down.to_move = Player::kP2;
  down.cells[1 * 4 + 2] = kP2Piece;
  down.cells[3 * 4 + 0] = kP1Piece;
  const auto dm = bt->legal_moves(down);
  REQUIRE(dm.size() == 3);
  CHECK(bt->terminal_payoff(bt->apply_move(down, dm[0])).score_p1 == -1.0);
}

TEST_CASE("random playouts respect invariants and ply bounds") {
  for (const auto& id : kAllGames) {
    const auto game = make_game(id);
    const int games = id == "reversi" || id == "hex-11" || id == "breakthrough-10" ? 20 : 100;
    int max_ply = 0;
    for (int i = 0; i < games; ++i) {
      max_ply = std::max(max_ply, checked_random_game(*game, 1000 + i));
    }
    INFO(id);
    CHECK(max_ply <= 4 * game->tile_count());
    if (id == "tictactoe") CHECK(max_ply <= 9);
    if (id == "connect4") CHECK(max_ply <= 42);
    if (id.rfind("hex-", 0) == 0) CHECK(max_ply <= game->tile_count());
  }
}

TEST_CASE("random playout is deterministic and bounded") {
  for (const auto& id : kAllGames) {
    const auto game = make_game(id);
    const GameState s = game->initial_state();
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const Outcome a = game->random_playout(s, seed);
      CHECK(a == game->random_playout(s, seed));
      CHECK(std::abs(a.score_p1) <= 1.0);
    }
  }
}

TEST_CASE("tic-tac-toe random play first-player win rate") {
  const double exact = oracle::ttt_random_p1_win({});
  CHECK(exact == doctest::Approx(0.585).epsilon(0.002));
  const auto game = make_game("tictactoe");
  const GameState s = game->initial_state();
  Rng rng(2024);
  int wins = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) wins += game->random_playout(s, rng).score_p1 > 0;
  CHECK(static_cast<double>(wins) / n == doctest::Approx(0.585).epsilon(0.01 / 0.585));
  CHECK(std::abs(static_cast<double>(wins) / n - exact) < 0.01);
}

TEST_CASE("hex random fill matches move-by-move playout statistics") {
  // The override fills the board at random; compare its win rate with the
  // generic stop-at-first-connection playout from the base class.
  const auto hex = make_game("hex-4");
  const GameState s = hex->initial_state();
  const int n = 20000;
  int fill_wins = 0;
  int step_wins = 0;
  Rng a(1);
  Rng b(2);
  for (int i = 0; i < n; ++i) {
    fill_wins += hex->random_playout(s, a).score_p1 > 0;
    GameState cur = s;
    while (!hex->is_terminal(cur)) {
      const auto moves = hex->legal_moves(cur);
      std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
      cur = hex->apply_move(cur, moves[pick(b)]);
    }
    step_wins += hex->terminal_payoff(cur).score_p1 > 0;
  }
  CHECK(std::abs(fill_wins - step_wins) / static_cast<double>(n) < 0.02);
}

TEST_CASE("encoding layout") {
  const auto game = make_game("tictactoe");
  GameState s = game->initial_state();
  s = game->apply_move(s, Move{4});
  const TileEncoding enc = game->encode_tiles(s);
  CHECK(enc.tiles == 9);
  CHECK(enc.features == 4);
  for (int t = 0; t < 9; ++t) {
    float sum = 0;
    for (int f = 0; f < 3; ++f) sum += enc.at(t, f);
    CHECK(sum == 1.0f);
    CHECK(enc.at(t, 3) == 0.0f);  // P2 to move
  }
  CHECK(enc.at(4, kP1Piece) == 1.0f);
  CHECK(enc.at(0, kEmpty) == 1.0f);
  const TileEncoding first = game->encode_tiles(game->initial_state());
  CHECK(first.at(0, 3) == 1.0f);
}

TEST_CASE("obfuscated encoding gathers rows by the permutation") {
  for (const auto& id : kAllGames) {
    const auto game = make_game(id);
    GameState s = game->initial_state();
    Rng rng(7);
    for (int i = 0; i < 5 && !game->is_terminal(s); ++i) {
      const auto moves = game->legal_moves(s);
      s = game->apply_move(s, moves[rng() % moves.size()]);
    }
    const TilePermutation perm = make_permutation(game->tile_count(), 99);
    REQUIRE(perm.is_bijection());
    const TileEncoding plain = game->encode_tiles(s);
    const TileEncoding mixed = game->encode_tiles(s, &perm);
    for (int i = 0; i < plain.tiles; ++i) {
      const auto a = mixed.row(i);
      const auto b = plain.row(perm.mapping[i]);
      CHECK(std::equal(a.begin(), a.end(), b.begin()));
    }
    // Gathering the obfuscated rows by the inverse restores the original.
    const TilePermutation inv = perm.inverse();
    std::vector<float> restored;
    for (int t = 0; t < plain.tiles; ++t) {
      const auto r = mixed.row(inv.mapping[t]);
      restored.insert(restored.end(), r.begin(), r.end());
    }
    CHECK(restored == plain.values);
  }
}

TEST_CASE("errors") {
  const auto game = make_game("tictactoe");
  const GameState s = game->initial_state();
  const GameState taken = game->apply_move(s, Move{0});
  auto kind_of = [](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::kInvalidArgument;
  };
  CHECK(kind_of([&] { game->apply_move(taken, Move{0}); }) == ErrorKind::kIllegalMove);
  CHECK(kind_of([&] { game->apply_move(s, Move{9}); }) == ErrorKind::kIllegalMove);
  CHECK(kind_of([&] { game->terminal_payoff(s); }) == ErrorKind::kNotTerminal);
  const TilePermutation wrong = make_permutation(8, 1);
  CHECK(kind_of([&] { game->encode_tiles(s, &wrong); }) ==
        ErrorKind::kPermutationMismatch);
}

TEST_CASE("states are plain values") {
  const auto game = make_game("connect4");
  const GameState s = game->initial_state();
  const GameState next = game->apply_move(s, Move{3});
  CHECK(s == game->initial_state());
  CHECK_FALSE(next == s);
  std::set<std::string> rendered;
  rendered.insert(game->render(s));
  rendered.insert(game->render(next));
  CHECK(rendered.size() == 2);
}

}
