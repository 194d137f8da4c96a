#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "boardsae/chess.hpp"
#include "support/game_gen.hpp"

using namespace boardsae;
using namespace boardsae::chess;

namespace {

// Board surgery for known perft positions (FEN import is out of scope).
Board board_from_rows(const char* rows[8], Color stm, std::uint8_t castling, int ep = -1) {
  Board b;
  b.sq.fill(0);
  for (int r = 0; r < 8; ++r) {
    for (int f = 0; f < 8; ++f) {
      char c = rows[7 - r][f];  // rows given rank 8 first
      if (c == '.') continue;
      Color col = std::isupper(static_cast<unsigned char>(c)) ? Color::White : Color::Black;
      Kind k;
      switch (std::toupper(static_cast<unsigned char>(c))) {
        case 'P': k = Kind::Pawn; break;
        case 'N': k = Kind::Knight; break;
        case 'B': k = Kind::Bishop; break;
        case 'R': k = Kind::Rook; break;
        case 'Q': k = Kind::Queen; break;
        default: k = Kind::King; break;
      }
      b.sq[make_square(f, r)] = piece(col, k);
    }
  }
  b.stm = stm;
  b.castling = castling;
  b.ep = std::int8_t(ep);
  return b;
}

}  // namespace

TEST_CASE("initial position has 20 legal moves") {
  REQUIRE(legal_moves(Board::initial()).size() == 20);
}

TEST_CASE("perft from the initial position") {
  Board b = Board::initial();
  REQUIRE(perft(b, 0) == 1);
  REQUIRE(perft(b, 1) == 20);
  REQUIRE(perft(b, 2) == 400);
  REQUIRE(perft(b, 3) == 8902);
}

TEST_CASE("perft on castling/en-passant heavy position") {
  // the classic "kiwipete" perft position
  const char* rows[8] = {
      "r...k..r",
      "p.ppqpb.",
      "bn..pnp.",
      "...PN...",
      ".p..P...",
      "..N..Q.p",
      "PPPBBPPP",
      "R...K..R",
  };
  Board b = board_from_rows(rows, Color::White, kWhiteKingside | kWhiteQueenside |
                                                    kBlackKingside | kBlackQueenside);
  REQUIRE(perft(b, 1) == 48);
  REQUIRE(perft(b, 2) == 2039);
  REQUIRE(perft(b, 3) == 97862);
}

TEST_CASE("perft on promotion-heavy position") {
  const char* rows[8] = {
      "rnbq.k.r",
      "pp.Pbppp",
      "..p.....",
      "........",
      "..B.....",
      "........",
      "PPP.NnPP",
      "RNBQK..R",
  };
  Board b = board_from_rows(rows, Color::White, kWhiteKingside | kWhiteQueenside);
  REQUIRE(perft(b, 1) == 44);
  REQUIRE(perft(b, 2) == 1486);
  REQUIRE(perft(b, 3) == 62379);
}

TEST_CASE("perft with en passant pins") {
  const char* rows[8] = {
      "........",
      "..p.....",
      "...p....",
      "KP.....r",
      ".R...p.k",
      "........",
      "....P.P.",
      "........",
  };
  Board b = board_from_rows(rows, Color::White, 0);
  REQUIRE(perft(b, 1) == 14);
  REQUIRE(perft(b, 2) == 191);
  REQUIRE(perft(b, 3) == 2812);
}

TEST_CASE("checkmated side has no moves") {
  // fool's mate
  Board b = Board::initial();
  for (const char* san : {"f3", "e5", "g4", "Qh4#"}) b = apply_san(b, san);
  REQUIRE(legal_moves(b).empty());
  REQUIRE(in_check(b, Color::White));
}

TEST_CASE("apply_san basics") {
  Board b = Board::initial();
  Board after = apply_san(b, "e4");
  REQUIRE(after.sq[make_square(4, 3)] == piece(Color::White, Kind::Pawn));
  REQUIRE(after.ep == make_square(4, 2));  // e3
  REQUIRE(after.stm == Color::Black);

  try {
    apply_san(b, "Ke2");
    FAIL("king move through own pawn should be illegal");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Legality);
  }

  Board c = Board::initial();
  for (const char* san : {"e4", "e5", "Nf3"}) c = apply_san(c, san);
  REQUIRE(c.sq[make_square(5, 2)] == piece(Color::White, Kind::Knight));
  REQUIRE(c.stm == Color::Black);
}

TEST_CASE("ambiguous SAN is rejected, disambiguated SAN accepted") {
  // knights end up on c3 and d4; both reach b5
  Board amb = Board::initial();
  for (const char* san : {"Nf3", "a6", "Nc3", "b6", "Nd4", "c6"}) amb = apply_san(amb, san);
  // knights now on d4 and c3: both can play to b5 and e2
  try {
    apply_san(amb, "Nb5");
    FAIL("expected ambiguity");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Ambiguity);
  }
  Board ok = apply_san(amb, "Ndb5");
  REQUIRE(ok.sq[make_square(1, 4)] == piece(Color::White, Kind::Knight));
}

TEST_CASE("parse_pgn counts moves and periods") {
  PgnGame g = parse_pgn("1.e4 e5 2.Nf3");
  REQUIRE(g.sans.size() == 3);
  REQUIRE(g.period_offsets == std::vector<std::size_t>{1, 9});

  PgnGame empty = parse_pgn("");
  REQUIRE(empty.sans.empty());
  REQUIRE(empty.period_offsets.empty());
}

TEST_CASE("parse_pgn reports malformed SAN with its offset") {
  try {
    parse_pgn("1.e9");
    FAIL("expected parse error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Parse);
    REQUIRE(e.offset() == 2);
  }
}

TEST_CASE("parse_pgn names the failing move index on illegal moves") {
  try {
    parse_pgn("1.e4 e5 2.Ke3");
    FAIL("expected legality error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Legality);
    REQUIRE(std::string(e.what()).find("move 2") != std::string::npos);
  }
}

TEST_CASE("parse_pgn accepts results, leading ';' and spaced form") {
  REQUIRE(parse_pgn(";1.e4 e5 1-0").sans.size() == 2);
  REQUIRE(parse_pgn("1. e4 e5 2. d4").sans.size() == 3);
  REQUIRE(parse_pgn("1.e4 e5 1/2-1/2").sans.size() == 2);
  REQUIRE_THROWS_AS(parse_pgn("1.e4 1-0 e5"), Error);
  REQUIRE_THROWS_AS(parse_pgn("2.e4"), Error);         // wrong move number
  REQUIRE_THROWS_AS(parse_pgn("1...e5"), Error);       // continuations unsupported
}

TEST_CASE("boards_at_periods snapshots are white to move") {
  PgnGame g = parse_pgn("1.e4 e5 2.Nf3");
  auto snaps = boards_at_periods(g);
  REQUIRE(snaps.size() == 2);
  REQUIRE(snaps[0].first == 1);
  REQUIRE(snaps[0].second.sq == Board::initial().sq);
  const Board& second = snaps[1].second;
  REQUIRE(second.sq[make_square(4, 3)] == piece(Color::White, Kind::Pawn));   // e4
  REQUIRE(second.sq[make_square(4, 4)] == piece(Color::Black, Kind::Pawn));   // e5
  for (const auto& [off, board] : snaps) REQUIRE(board.stm == Color::White);

  auto one = boards_at_periods(parse_pgn("1.d4"));
  REQUIRE(one.size() == 1);
  REQUIRE(one[0].second.sq == Board::initial().sq);
}

TEST_CASE("one snapshot per full move") {
  std::string text = testsupport::random_chess_movetext(99, 12);
  PgnGame g = parse_pgn(text);
  auto snaps = boards_at_periods(g);
  REQUIRE(snaps.size() == g.period_offsets.size());
  REQUIRE(snaps.size() == (g.sans.size() + 1) / 2);
}

TEST_CASE("SAN round trip over random games") {
  // every legal move, rendered to SAN and applied via apply_san, reproduces
  // the same successor position
  std::mt19937_64 rng(5);
  Board b = Board::initial();
  for (int ply = 0; ply < 120; ++ply) {
    auto moves = legal_moves(b);
    if (moves.empty()) break;
    for (const Move& m : moves) {
      std::string san = to_san(b, m);
      Board direct = apply_move(b, m);
      Board via_san = apply_san(b, san);
      REQUIRE(direct.sq == via_san.sq);
      REQUIRE(direct.castling == via_san.castling);
      REQUIRE(direct.ep == via_san.ep);
    }
    std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
    b = apply_move(b, moves[pick(rng)]);
  }
}

TEST_CASE("legal move ordering is deterministic") {
  auto moves = legal_moves(Board::initial());
  for (std::size_t i = 1; i < moves.size(); ++i)
    REQUIRE(move_order(moves[i - 1], moves[i]));
}

TEST_CASE("legal_moves validates board invariants") {
  Board b = Board::initial();
  b.sq[make_square(4, 0)] = 0;  // remove the white king
  try {
    legal_moves(b);
    FAIL("expected state error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::State);
  }

  Board bad_ep = Board::initial();
  bad_ep.ep = std::int8_t(make_square(0, 4));  // a5 is not a valid ep rank
  REQUIRE_THROWS_AS(legal_moves(bad_ep), Error);
}

TEST_CASE("random games replay through parse_pgn") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    std::string text = testsupport::random_chess_movetext(seed);
    PgnGame g = parse_pgn(text);  // throws on any legality break
    REQUIRE(g.sans.size() >= 1);
  }
}

TEST_CASE("attack map routes agree") {
  // target-centric square_attacked vs attacker-centric piece_attacks union
  auto positions = testsupport::random_chess_positions(31, 200);
  positions.push_back(Board::initial());
  for (const Board& b : positions) {
    for (Color by : {Color::White, Color::Black}) {
      std::uint64_t map = attack_map(b, by);
      for (int s = 0; s < 64; ++s) {
        bool a = (map >> s) & 1;
        bool t = square_attacked(b, s, by);
        REQUIRE(a == t);
      }
    }
  }
}

TEST_CASE("fen export for debugging") {
  REQUIRE(to_fen(Board::initial()) ==
          "rnbqkbnr/pppppppp/8/8/8/8/PPPPPPPP/RNBQKBNR w KQkq - 0 1");
  Board b = apply_san(Board::initial(), "e4");
  REQUIRE(to_fen(b) == "rnbqkbnr/pppppppp/8/8/4P3/8/PPPP1PPP/RNBQKBNR b KQkq e3 0 1");
}
