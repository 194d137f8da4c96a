#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "boardsae/bsp.hpp"
#include "support/game_gen.hpp"

using namespace boardsae;
using namespace boardsae::bsp;
namespace ch = boardsae::chess;

namespace {

std::size_t strategy_index(const std::string& name) {
  const auto& names = strategy_concept_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  FAIL("unknown concept " + name);
  return 0;
}

}  // namespace

TEST_CASE("catalog sizes and hashes") {
  REQUIRE(chess_catalog(ChessBlock::BoardState).size() == 8 * 8 * 12);
  REQUIRE(chess_catalog(ChessBlock::Strategy).size() == 12 + 64 + 64);
  REQUIRE(chess_catalog(ChessBlock::Full).size() == 768 + 140);
  REQUIRE(othello_catalog().size() == 8 * 8 * 2);
  REQUIRE(synthetic_catalog(64).size() == 64);
  REQUIRE(chess_catalog(ChessBlock::BoardState).hash() !=
          chess_catalog(ChessBlock::Strategy).hash());
  REQUIRE(othello_catalog().hash() == othello_catalog().hash());
}

TEST_CASE("initial chess position labels are all zero (masking)") {
  BitVec v = chess_board_state_labels(ch::Board::initial());
  REQUIRE(v.size() == 768);
  REQUIRE(v.count() == 0);
}

TEST_CASE("board-state labels after 1.e4 e5") {
  auto snaps = ch::boards_at_periods(ch::parse_pgn("1.e4 e5 2.Nf3"));
  BitVec v = chess_board_state_labels(snaps[1].second);
  // mine pawn on e4 (rel index 0), yours pawn on e5 (rel index 6)
  std::size_t e4 = std::size_t(make_square(4, 3)) * 12 + 0;
  std::size_t e5 = std::size_t(make_square(4, 4)) * 12 + 6;
  REQUIRE(v.get(e4));
  REQUIRE(v.get(e5));
  REQUIRE(v.count() == 2);
}

TEST_CASE("moved-back pieces are measured, initial placements are not") {
  // white knight returns to g1: still masked there; black knight to a6 measured
  auto g = ch::parse_pgn("1.Nf3 Na6 2.Ng1");
  auto snaps = ch::boards_at_periods(g);
  const ch::Board& b = snaps[1].second;  // after 1.Nf3 Na6, white to move
  BitVec v = chess_board_state_labels(b);
  std::size_t f3 = std::size_t(make_square(5, 2)) * 12 + 1;   // mine knight f3
  std::size_t a6 = std::size_t(make_square(0, 5)) * 12 + 7;   // yours knight a6
  REQUIRE(v.get(f3));
  REQUIRE(v.get(a6));
  REQUIRE(v.count() == 2);
}

TEST_CASE("strategy labels at the initial position") {
  BitVec v = chess_strategy_labels(ch::Board::initial());
  REQUIRE(v.size() == 140);
  REQUIRE_FALSE(v.get(strategy_index("check")));
  REQUIRE_FALSE(v.get(strategy_index("can_check")));
  REQUIRE(v.get(strategy_index("queen")));
  REQUIRE_FALSE(v.get(strategy_index("can_capture_queen")));
  REQUIRE(v.get(strategy_index("bishop_pair")));
  REQUIRE(v.get(strategy_index("castling_rights")));
  REQUIRE(v.get(strategy_index("kingside_castling_rights")));
  REQUIRE(v.get(strategy_index("queenside_castling_rights")));
  REQUIRE_FALSE(v.get(strategy_index("fork")));
  REQUIRE_FALSE(v.get(strategy_index("pin")));
  REQUIRE_FALSE(v.get(strategy_index("legal_en_passant")));
  REQUIRE_FALSE(v.get(strategy_index("ambiguous_moves")));

  // 16 distinct legal destinations from the start
  std::size_t legal_bits = 0;
  for (std::size_t s = 0; s < 64; ++s)
    if (v.get(12 + 64 + s)) ++legal_bits;
  REQUIRE(legal_bits == 16);
}

TEST_CASE("check and queen concepts on a lone-kings position") {
  ch::Board b;
  b.sq.fill(0);
  b.sq[make_square(4, 0)] = ch::piece(ch::Color::White, ch::Kind::King);   // e1
  b.sq[make_square(4, 7)] = ch::piece(ch::Color::Black, ch::Kind::King);   // e8
  b.sq[make_square(4, 3)] = ch::piece(ch::Color::Black, ch::Kind::Queen);  // e4, checks e1
  b.stm = ch::Color::White;
  b.castling = 0;
  BitVec v = chess_strategy_labels(b);
  REQUIRE(v.get(strategy_index("check")));
  REQUIRE_FALSE(v.get(strategy_index("queen")));  // the mover has no queen
}

TEST_CASE("en passant concept fires exactly when a legal ep capture exists") {
  auto g = ch::parse_pgn("1.e4 a6 2.e5 d5 3.");
  auto snaps = ch::boards_at_periods(g);
  const ch::Board& b = snaps.back().second;
  REQUIRE(b.ep >= 0);
  BitVec v = chess_strategy_labels(b);
  REQUIRE(v.get(strategy_index("legal_en_passant")));
}

TEST_CASE("fork detection on a constructed knight fork") {
  ch::Board b;
  b.sq.fill(0);
  b.sq[make_square(6, 0)] = ch::piece(ch::Color::White, ch::Kind::King);    // g1
  b.sq[make_square(0, 7)] = ch::piece(ch::Color::Black, ch::Kind::King);    // a8
  b.sq[make_square(2, 2)] = ch::piece(ch::Color::White, ch::Kind::Knight);  // c3
  b.sq[make_square(1, 4)] = ch::piece(ch::Color::Black, ch::Kind::Rook);    // b5
  b.sq[make_square(3, 4)] = ch::piece(ch::Color::Black, ch::Kind::Queen);   // d5
  b.stm = ch::Color::White;
  b.castling = 0;
  BitVec v = chess_strategy_labels(b);
  REQUIRE(v.get(strategy_index("fork")));  // Nc3 attacks b5 and d5
  REQUIRE(v.get(strategy_index("can_capture_queen")));
}

TEST_CASE("pin detection for either side") {
  // white bishop pins the black knight against the black king
  ch::Board b;
  b.sq.fill(0);
  b.sq[make_square(0, 0)] = ch::piece(ch::Color::White, ch::Kind::King);    // a1
  b.sq[make_square(7, 7)] = ch::piece(ch::Color::Black, ch::Kind::King);    // h8
  b.sq[make_square(5, 5)] = ch::piece(ch::Color::Black, ch::Kind::Knight);  // f6
  b.sq[make_square(2, 2)] = ch::piece(ch::Color::White, ch::Kind::Bishop);  // c3
  b.stm = ch::Color::White;
  b.castling = 0;
  BitVec v = chess_strategy_labels(b);
  REQUIRE(v.get(strategy_index("pin")));

  // remove the bishop: no pin remains
  b.sq[make_square(2, 2)] = 0;
  REQUIRE_FALSE(chess_strategy_labels(b).get(strategy_index("pin")));
}

TEST_CASE("legal-move destination bits equal the engine's destination set") {
  auto positions = testsupport::random_chess_positions(17, 60);
  positions.push_back(ch::Board::initial());
  for (ch::Board b : positions) {
    if (b.stm != ch::Color::White) b.stm = ch::Color::White;
    if (ch::in_check(b, ch::Color::Black)) continue;  // forcing stm breaks such boards
    BitVec v = chess_strategy_labels(b);
    std::set<int> expected;
    for (const ch::Move& m : ch::legal_moves(b)) expected.insert(int(m.to));
    std::set<int> got;
    for (int s = 0; s < 64; ++s)
      if (v.get(std::size_t(12 + 64 + s))) got.insert(s);
    REQUIRE(got == expected);
  }
}

TEST_CASE("threatened squares computed two ways agree on random positions") {
  auto positions = testsupport::random_chess_positions(23, 1000);
  for (ch::Board b : positions) {
    if (b.stm != ch::Color::White) b.stm = ch::Color::White;
    if (ch::in_check(b, ch::Color::Black)) continue;
    BitVec v = chess_strategy_labels(b);
    // independent route: attacker-centric enumeration over black's pieces
    std::uint64_t map = ch::attack_map(b, ch::Color::Black);
    for (int s = 0; s < 64; ++s)
      REQUIRE(v.get(std::size_t(12 + s)) == bool((map >> s) & 1));
  }
}

TEST_CASE("check implies every labeled-legal destination evades check") {
  auto positions = testsupport::random_chess_positions(41, 400);
  for (ch::Board b : positions) {
    if (b.stm != ch::Color::White) continue;
    if (!ch::in_check(b, ch::Color::White)) continue;
    BitVec v = chess_strategy_labels(b);
    REQUIRE(v.get(strategy_index("check")));
    for (const ch::Move& m : ch::legal_moves(b)) {
      ch::Board nb = ch::apply_move(b, m);
      REQUIRE_FALSE(ch::in_check(nb, ch::Color::White));
      REQUIRE(v.get(std::size_t(12 + 64 + m.to)));
    }
  }
}

TEST_CASE("othello labels equal the relative encoding") {
  auto t = othello::random_game(2);
  for (const othello::Board& b : othello::replay_states(t))
    REQUIRE(othello_board_labels(b) == othello::relative_encoding(b));
}

TEST_CASE("label width is constant across positions") {
  std::string text = testsupport::random_chess_movetext(8);
  auto snaps = ch::boards_at_periods(ch::parse_pgn(text));
  for (const auto& [off, b] : snaps) {
    REQUIRE(chess_board_state_labels(b).size() == 768);
    REQUIRE(chess_strategy_labels(b).size() == 140);
    REQUIRE(chess_labels(b, ChessBlock::Full).size() == 908);
  }
}

TEST_CASE("board-state labels require white to move") {
  ch::Board b = ch::apply_san(ch::Board::initial(), "e4");
  REQUIRE(b.stm == ch::Color::Black);
  REQUIRE_THROWS_AS(chess_board_state_labels(b), Error);
}
