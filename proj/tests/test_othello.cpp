#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "boardsae/othello.hpp"

using namespace boardsae;
using namespace boardsae::othello;

namespace {
int sq(const char* name) { return parse_square(name); }
}  // namespace

TEST_CASE("opening legal moves for black") {
  Board b = Board::setup();
  std::vector<int> moves = legal_moves(b);
  std::set<int> got(moves.begin(), moves.end());
  REQUIRE(got == std::set<int>{sq("d3"), sq("c4"), sq("f5"), sq("e6")});
}

TEST_CASE("applying d3 flips d4") {
  Board b = apply_move(Board::setup(), sq("d3"));
  std::set<int> black, white;
  for (int s = 0; s < 64; ++s) {
    if (b.grid[std::size_t(s)] == kBlack) black.insert(s);
    if (b.grid[std::size_t(s)] == kWhite) white.insert(s);
  }
  REQUIRE(black == std::set<int>{sq("d3"), sq("d4"), sq("d5"), sq("e4")});
  REQUIRE(white == std::set<int>{sq("e5")});
  REQUIRE(b.stm == kWhite);
}

TEST_CASE("illegal move raises a legality error") {
  try {
    apply_move(Board::setup(), sq("a1"));
    FAIL("expected legality error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Legality);
  }
}

TEST_CASE("a move can flip several directions at once") {
  Board b;
  b.grid.fill(kEmpty);
  b.stm = kBlack;
  // two white lines from d4: east capped by f4, north capped by d6
  b.grid[std::size_t(sq("e4"))] = kWhite;
  b.grid[std::size_t(sq("f4"))] = kBlack;
  b.grid[std::size_t(sq("d5"))] = kWhite;
  b.grid[std::size_t(sq("d6"))] = kBlack;
  std::vector<int> flips = flips_for(b, sq("d4"));
  std::set<int> got(flips.begin(), flips.end());
  REQUIRE(got == std::set<int>{sq("e4"), sq("d5")});
  Board after = apply_move(b, sq("d4"));
  REQUIRE(after.grid[std::size_t(sq("e4"))] == kBlack);
  REQUIRE(after.grid[std::size_t(sq("d5"))] == kBlack);
}

TEST_CASE("full board has no legal moves") {
  Board b;
  b.grid.fill(kBlack);
  b.stm = kWhite;
  REQUIRE(legal_moves(b).empty());
  REQUIRE(game_over(b));
}

TEST_CASE("disc count grows by exactly one per move and flips at least one disc") {
  std::mt19937_64 rng(4);
  Board b = Board::setup();
  for (int step = 0; step < 400; ++step) {
    std::vector<int> moves = legal_moves(b);
    if (moves.empty()) {
      if (game_over(b)) break;
      b = apply_pass(b);
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
    int mv = moves[pick(rng)];
    REQUIRE(flips_for(b, mv).size() >= 1);
    int before = occupied_count(b);
    b = apply_move(b, mv);
    REQUIRE(occupied_count(b) == before + 1);
  }
}

TEST_CASE("random games are deterministic per seed and replayable") {
  Transcript a = random_game(123);
  Transcript b = random_game(123);
  REQUIRE(a.moves == b.moves);
  REQUIRE(transcript_to_string(a) == transcript_to_string(b));

  Transcript c = random_game(124);
  REQUIRE(a.moves != c.moves);

  std::set<int> openings{sq("d3"), sq("c4"), sq("f5"), sq("e6")};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Transcript t = random_game(seed);
    REQUIRE(openings.count(t.moves.at(0)) == 1);
    Transcript replayed = parse_transcript(transcript_to_string(t));  // validates
    REQUIRE(replayed.moves == t.moves);
  }
}

TEST_CASE("transcript parsing rejects illegal tokens") {
  REQUIRE_THROWS_AS(parse_transcript("a1"), Error);
  REQUIRE_THROWS_AS(parse_transcript("d3 --"), Error);  // pass while moves exist
  REQUIRE_THROWS_AS(parse_transcript("z9"), Error);
  REQUIRE(parse_transcript("d3 c5").moves.size() == 2);
  REQUIRE(parse_transcript("").moves.empty());
}

TEST_CASE("relative encoding marks mine and yours halves") {
  Board b = Board::setup();  // black to move
  BitVec enc = relative_encoding(b);
  REQUIRE(enc.size() == 128);
  std::set<std::size_t> mine, yours;
  for (std::size_t i = 0; i < 64; ++i) {
    if (enc.get(i)) mine.insert(i);
    if (enc.get(64 + i)) yours.insert(i);
  }
  REQUIRE(mine == std::set<std::size_t>{std::size_t(sq("d5")), std::size_t(sq("e4"))});
  REQUIRE(yours == std::set<std::size_t>{std::size_t(sq("d4")), std::size_t(sq("e5"))});

  REQUIRE_FALSE(enc.get(std::size_t(sq("a1"))));
  REQUIRE_FALSE(enc.get(64 + std::size_t(sq("a1"))));
}

TEST_CASE("swapping side to move swaps the encoding halves") {
  Board b = Board::setup();
  Board swapped = b;
  swapped.stm = other(b.stm);
  BitVec e1 = relative_encoding(b);
  BitVec e2 = relative_encoding(swapped);
  for (std::size_t s = 0; s < 64; ++s) {
    REQUIRE(e1.get(s) == e2.get(64 + s));
    REQUIRE(e1.get(64 + s) == e2.get(s));
  }
}

TEST_CASE("mine/yours symmetry under global color inversion") {
  Transcript t = random_game(9);
  for (const Board& b : replay_states(t)) {
    Board inverted = b;
    for (auto& cell : inverted.grid)
      if (cell != kEmpty) cell = other(cell);
    inverted.stm = other(b.stm);
    REQUIRE(relative_encoding(b) == relative_encoding(inverted));
  }
}

TEST_CASE("replay states include pass tokens") {
  Transcript with_pass;
  bool found_pass = false;
  for (std::uint64_t seed = 0; seed < 300 && !found_pass; ++seed) {
    Transcript t = random_game(seed);
    for (int m : t.moves)
      if (m == kPass) {
        found_pass = true;
        with_pass = t;
        break;
      }
  }
  REQUIRE(found_pass);  // passes do occur in uniform random play
  REQUIRE(replay_states(with_pass).size() == with_pass.moves.size());
}
