#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "boardsae/bits.hpp"
#include "boardsae/chess.hpp"
#include "boardsae/common.hpp"
#include "boardsae/othello.hpp"

// Binary board-state-property labels. Chess has a 8x8x12 piece-location block
// (relative mine/yours colors, initial-placement squares masked out) and a
// strategy block of 12 singleton concepts plus 64 threatened-square and 64
// legal-destination bits. Othello has a 8x8x2 mine/yours occupancy block.

namespace boardsae::bsp {

enum class ChessBlock { BoardState, Strategy, Full };

struct Catalog {
  GameKind game;
  std::vector<std::string> names;

  std::size_t size() const { return names.size(); }

  std::uint64_t hash() const {
    std::uint64_t h = fnv1a(game_kind_name(game));
    for (const std::string& n : names) {
      h = fnv1a(n, h);
      h = fnv1a("\n", h);
    }
    return h;
  }
};

inline const std::array<std::string, 12>& relative_kind_names() {
  static const std::array<std::string, 12> names = {
      "mine_pawn", "mine_knight", "mine_bishop", "mine_rook", "mine_queen", "mine_king",
      "yours_pawn", "yours_knight", "yours_bishop", "yours_rook", "yours_queen", "yours_king"};
  return names;
}

inline const std::vector<std::string>& strategy_concept_names() {
  static const std::vector<std::string> names = {
      "check", "can_check", "queen", "can_capture_queen", "bishop_pair",
      "castling_rights", "kingside_castling_rights", "queenside_castling_rights",
      "fork", "pin", "legal_en_passant", "ambiguous_moves"};
  return names;
}

inline Catalog chess_catalog(ChessBlock block) {
  Catalog c{GameKind::Chess, {}};
  if (block == ChessBlock::BoardState || block == ChessBlock::Full) {
    for (int s = 0; s < 64; ++s)
      for (const std::string& k : relative_kind_names())
        c.names.push_back(k + "_" + square_name(s));
  }
  if (block == ChessBlock::Strategy || block == ChessBlock::Full) {
    for (const std::string& n : strategy_concept_names()) c.names.push_back(n);
    for (int s = 0; s < 64; ++s) c.names.push_back("threatened_" + square_name(s));
    for (int s = 0; s < 64; ++s) c.names.push_back("legal_move_" + square_name(s));
  }
  return c;
}

inline Catalog othello_catalog() {
  Catalog c{GameKind::Othello, {}};
  for (int s = 0; s < 64; ++s) c.names.push_back("mine_" + square_name(s));
  for (int s = 0; s < 64; ++s) c.names.push_back("yours_" + square_name(s));
  return c;
}

inline Catalog synthetic_catalog(std::size_t m_true) {
  Catalog c{GameKind::Synthetic, {}};
  for (std::size_t i = 0; i < m_true; ++i) c.names.push_back("feature_" + std::to_string(i));
  return c;
}

namespace detail {

// masked(sq, rel) == true when that exact colored piece starts the game there
// (white to move, so mine == white).
inline const std::array<std::array<bool, 12>, 64>& initial_placement_mask() {
  static const auto mask = [] {
    std::array<std::array<bool, 12>, 64> m{};
    chess::Board init = chess::Board::initial();
    for (int s = 0; s < 64; ++s) {
      std::int8_t p = init.sq[s];
      if (p == 0) continue;
      int rel = int(chess::kind_of(p)) + (p > 0 ? 0 : 6);
      m[std::size_t(s)][std::size_t(rel)] = true;
    }
    return m;
  }();
  return mask;
}

}  // namespace detail

// 8x8x12 piece-location bits, square-major. A bit is set when the piece is on
// the square and the square is not that exact piece's initial placement.
// Requires white to move (labels are taken at '.' snapshots).
inline BitVec chess_board_state_labels(const chess::Board& b) {
  require(b.stm == chess::Color::White, ErrorKind::State,
          "board-state labels are defined on white-to-move snapshots");
  const auto& masked = detail::initial_placement_mask();
  BitVec v(64 * 12);
  for (int s = 0; s < 64; ++s) {
    std::int8_t p = b.sq[s];
    if (p == 0) continue;
    int rel = int(chess::kind_of(p)) + (p > 0 ? 0 : 6);  // mine == white
    if (masked[std::size_t(s)][std::size_t(rel)]) continue;
    v.set(std::size_t(s) * 12 + std::size_t(rel));
  }
  return v;
}

namespace detail {

inline bool any_absolute_pin(const chess::Board& b, chess::Color side) {
  using namespace chess;
  int ks = b.king_square(side);
  int kf = file_of(ks), kr = rank_of(ks);
  constexpr int df[8] = {1, 1, 1, 0, 0, -1, -1, -1};
  constexpr int dr[8] = {1, 0, -1, 1, -1, 1, 0, -1};
  for (int d = 0; d < 8; ++d) {
    bool diag = df[d] != 0 && dr[d] != 0;
    int f = kf + df[d], r = kr + dr[d];
    int blocker = -1;
    while (on_board(f, r)) {
      int s = make_square(f, r);
      std::int8_t p = b.sq[s];
      if (p != 0) {
        if (blocker < 0) {
          if (!is_color(p, side)) break;  // enemy piece adjacent to the ray: no pin here
          blocker = s;
        } else {
          if (!is_color(p, side)) {
            Kind k = kind_of(p);
            bool slides = k == Kind::Queen || (diag ? k == Kind::Bishop : k == Kind::Rook);
            if (slides) return true;
          }
          break;
        }
      }
      f += df[d];
      r += dr[d];
    }
  }
  return false;
}

}  // namespace detail

// Strategy block, evaluated from the perspective of the player to move
// (white, on '.' snapshots). Order matches strategy_concept_names(), then the
// 64 threatened-square bits, then the 64 legal-destination bits.
inline BitVec chess_strategy_labels(const chess::Board& b) {
  using namespace chess;
  require(b.stm == Color::White, ErrorKind::State,
          "strategy labels are defined on white-to-move snapshots");
  BitVec v(12 + 64 + 64);

  const std::vector<Move> moves = legal_moves(b);
  const Color me = b.stm, them = opponent(me);

  // check
  if (in_check(b, me)) v.set(0);

  // can_check / can_capture_queen / legal_en_passant (single scan of moves)
  bool can_check = false, can_capture_queen = false, has_ep = false;
  for (const Move& m : moves) {
    if (!can_check) {
      Board nb = apply_move(b, m);
      if (in_check(nb, them)) can_check = true;
    }
    if (m.capture && !m.en_passant && b.sq[m.to] == piece(them, Kind::Queen))
      can_capture_queen = true;
    if (m.en_passant) has_ep = true;
  }
  if (can_check) v.set(1);

  // queen / bishop_pair
  int queens = 0, bishops = 0;
  for (int s = 0; s < 64; ++s) {
    if (b.sq[s] == piece(me, Kind::Queen)) ++queens;
    if (b.sq[s] == piece(me, Kind::Bishop)) ++bishops;
  }
  if (queens >= 1) v.set(2);
  if (can_capture_queen) v.set(3);
  if (bishops >= 2) v.set(4);

  // castling rights of the player to move
  std::uint8_t ks_bit = me == Color::White ? kWhiteKingside : kBlackKingside;
  std::uint8_t qs_bit = me == Color::White ? kWhiteQueenside : kBlackQueenside;
  if (b.castling & (ks_bit | qs_bit)) v.set(5);
  if (b.castling & ks_bit) v.set(6);
  if (b.castling & qs_bit) v.set(7);

  // fork: one of my pieces attacks >= 2 distinct opponent major pieces (Q/R)
  std::uint64_t majors = 0;
  for (int s = 0; s < 64; ++s)
    if (b.sq[s] == piece(them, Kind::Queen) || b.sq[s] == piece(them, Kind::Rook))
      majors |= std::uint64_t(1) << s;
  bool fork = false;
  for (int s = 0; s < 64 && !fork; ++s) {
    if (b.sq[s] == 0 || !is_color(b.sq[s], me)) continue;
    std::uint64_t hit = piece_attacks(b, s) & majors;
    if (std::popcount(hit) >= 2) fork = true;
  }
  if (fork) v.set(8);

  // pin: any absolute pin on the board, for either side
  if (detail::any_absolute_pin(b, me) || detail::any_absolute_pin(b, them)) v.set(9);

  if (has_ep) v.set(10);

  // ambiguous_moves: some (kind, destination) reachable by >= 2 of my pieces
  std::map<std::pair<int, int>, std::set<int>> by_kind_dest;
  bool ambiguous = false;
  for (const Move& m : moves) {
    if (m.castle) continue;
    auto& froms = by_kind_dest[{int(kind_of(b.sq[m.from])), int(m.to)}];
    froms.insert(int(m.from));
    if (froms.size() >= 2) ambiguous = true;
  }
  if (ambiguous) v.set(11);

  // threatened squares: attacked by any opponent piece (attack-map semantics)
  for (int s = 0; s < 64; ++s)
    if (square_attacked(b, s, them)) v.set(std::size_t(12 + s));

  // legal destinations of the player to move
  for (const Move& m : moves) v.set(std::size_t(12 + 64 + m.to));

  return v;
}

inline BitVec chess_labels(const chess::Board& b, ChessBlock block) {
  if (block == ChessBlock::BoardState) return chess_board_state_labels(b);
  if (block == ChessBlock::Strategy) return chess_strategy_labels(b);
  BitVec bs = chess_board_state_labels(b);
  BitVec st = chess_strategy_labels(b);
  BitVec v(bs.size() + st.size());
  for (std::size_t i = 0; i < bs.size(); ++i)
    if (bs.get(i)) v.set(i);
  for (std::size_t i = 0; i < st.size(); ++i)
    if (st.get(i)) v.set(bs.size() + i);
  return v;
}

// 8x8x2 block; identical to the engine's relative encoding.
inline BitVec othello_board_labels(const othello::Board& b) {
  return othello::relative_encoding(b);
}

}  // namespace boardsae::bsp
