#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "boardsae/bits.hpp"
#include "boardsae/errors.hpp"
#include "boardsae/squares.hpp"

// Othello rules, transcript parsing, seeded uniform random game generation,
// and the relative (mine/yours) board encoding.

namespace boardsae::othello {

constexpr std::int8_t kEmpty = 0;
constexpr std::int8_t kBlack = 1;
constexpr std::int8_t kWhite = 2;

inline std::int8_t other(std::int8_t color) { return color == kBlack ? kWhite : kBlack; }

struct Board {
  std::array<std::int8_t, 64> grid{};
  std::int8_t stm = kBlack;  // black moves first

  // White on d4/e5, black on d5/e4.
  static Board setup() {
    Board b;
    b.grid[make_square(3, 3)] = kWhite;  // d4
    b.grid[make_square(4, 4)] = kWhite;  // e5
    b.grid[make_square(3, 4)] = kBlack;  // d5
    b.grid[make_square(4, 3)] = kBlack;  // e4
    return b;
  }
};

inline int disc_count(const Board& b, std::int8_t color) {
  int n = 0;
  for (std::int8_t c : b.grid)
    if (c == color) ++n;
  return n;
}

inline int occupied_count(const Board& b) {
  return disc_count(b, kBlack) + disc_count(b, kWhite);
}

namespace detail {
constexpr int kDf[8] = {1, 1, 1, 0, 0, -1, -1, -1};
constexpr int kDr[8] = {1, 0, -1, 1, -1, 1, 0, -1};
}  // namespace detail

// Squares flipped if the side to move plays sq; empty when the move is illegal.
inline std::vector<int> flips_for(const Board& b, int sq) {
  std::vector<int> flips;
  if (sq < 0 || sq >= 64 || b.grid[sq] != kEmpty) return flips;
  std::int8_t me = b.stm, them = other(me);
  int f0 = file_of(sq), r0 = rank_of(sq);
  for (int d = 0; d < 8; ++d) {
    int f = f0 + detail::kDf[d], r = r0 + detail::kDr[d];
    std::size_t mark = flips.size();
    while (on_board(f, r) && b.grid[make_square(f, r)] == them) {
      flips.push_back(make_square(f, r));
      f += detail::kDf[d];
      r += detail::kDr[d];
    }
    if (!(on_board(f, r) && b.grid[make_square(f, r)] == me)) flips.resize(mark);
  }
  return flips;
}

inline std::vector<int> legal_moves(const Board& b) {
  std::vector<int> out;
  for (int s = 0; s < 64; ++s)
    if (b.grid[s] == kEmpty && !flips_for(b, s).empty()) out.push_back(s);
  return out;  // ascending square order
}

inline Board apply_move(const Board& b, int sq) {
  std::vector<int> flips = flips_for(b, sq);
  require(!flips.empty(), ErrorKind::Legality,
          "illegal Othello move " + (sq >= 0 && sq < 64 ? square_name(sq) : std::string("?")));
  Board r = b;
  r.grid[sq] = b.stm;
  for (int s : flips) r.grid[s] = b.stm;
  r.stm = other(b.stm);
  return r;
}

// Turn passes without a disc; only valid when the mover has no legal move.
inline Board apply_pass(const Board& b) {
  require(legal_moves(b).empty(), ErrorKind::State, "pass while legal moves exist");
  Board r = b;
  r.stm = other(b.stm);
  return r;
}

inline bool game_over(const Board& b) {
  if (!legal_moves(b).empty()) return false;
  Board flipped = b;
  flipped.stm = other(b.stm);
  return legal_moves(flipped).empty();
}

constexpr int kPass = -1;

struct Transcript {
  std::vector<int> moves;  // square index, or kPass
};

// Each move drawn uniformly from the current legal set; passes recorded as
// explicit markers. Game ends when neither player can move.
inline Transcript random_game(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Transcript t;
  Board b = Board::setup();
  while (true) {
    std::vector<int> moves = legal_moves(b);
    if (moves.empty()) {
      if (game_over(b)) break;
      t.moves.push_back(kPass);
      b = apply_pass(b);
      continue;
    }
    std::uniform_int_distribution<std::size_t> pick(0, moves.size() - 1);
    int sq = moves[pick(rng)];
    t.moves.push_back(sq);
    b = apply_move(b, sq);
  }
  return t;
}

inline std::string transcript_to_string(const Transcript& t) {
  std::string out;
  for (std::size_t i = 0; i < t.moves.size(); ++i) {
    if (i) out += ' ';
    out += t.moves[i] == kPass ? std::string("--") : square_name(t.moves[i]);
  }
  return out;
}

// Parses "d3 c5 -- e6 ..." and validates it by replay.
inline Transcript parse_transcript(std::string_view line) {
  Transcript t;
  Board b = Board::setup();
  std::size_t i = 0, n = line.size();
  while (i < n) {
    while (i < n && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= n) break;
    std::size_t tok_start = i;
    while (i < n && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    std::string_view tok = line.substr(tok_start, i - tok_start);
    if (tok == "--") {
      require(legal_moves(b).empty(), ErrorKind::Legality,
              "pass marker while moves exist (token " + std::to_string(t.moves.size()) + ")",
              long(tok_start));
      require(!game_over(b), ErrorKind::Legality, "pass marker after game end",
              long(tok_start));
      b = apply_pass(b);
      t.moves.push_back(kPass);
      continue;
    }
    int sq = parse_square(tok, long(tok_start));
    try {
      b = apply_move(b, sq);
    } catch (const Error& e) {
      throw Error(e.kind(),
                  std::string(e.what()) + " (token " + std::to_string(t.moves.size()) + ")",
                  long(tok_start));
    }
    t.moves.push_back(sq);
  }
  return t;
}

// Board after each token of the transcript, pass tokens included.
inline std::vector<Board> replay_states(const Transcript& t) {
  std::vector<Board> out;
  out.reserve(t.moves.size());
  Board b = Board::setup();
  for (int mv : t.moves) {
    b = mv == kPass ? apply_pass(b) : apply_move(b, mv);
    out.push_back(b);
  }
  return out;
}

// 128 bits: [0,64) = square occupied by the side to move ("mine"),
// [64,128) = occupied by the opponent ("yours").
inline BitVec relative_encoding(const Board& b) {
  BitVec v(128);
  for (int s = 0; s < 64; ++s) {
    if (b.grid[s] == b.stm)
      v.set(std::size_t(s));
    else if (b.grid[s] == other(b.stm))
      v.set(std::size_t(64 + s));
  }
  return v;
}

}  // namespace boardsae::othello
