#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "boardsae/errors.hpp"
#include "boardsae/squares.hpp"

// Full chess rules: board state, FIDE-legal move generation, SAN in both
// directions, compact PGN movetext parsing, and per-period board snapshots.

namespace boardsae::chess {

enum class Color : std::uint8_t { White = 0, Black = 1 };

inline Color opponent(Color c) { return c == Color::White ? Color::Black : Color::White; }

enum class Kind : std::uint8_t { Pawn = 0, Knight, Bishop, Rook, Queen, King };

// Board cells: 0 empty, +1..+6 white pawn..king, -1..-6 black pawn..king.
inline std::int8_t piece(Color c, Kind k) {
  std::int8_t v = std::int8_t(int(k) + 1);
  return c == Color::White ? v : std::int8_t(-v);
}
inline bool is_color(std::int8_t p, Color c) {
  return c == Color::White ? p > 0 : p < 0;
}
inline Kind kind_of(std::int8_t p) { return Kind((p > 0 ? p : -p) - 1); }

inline char kind_letter(Kind k) { return "PNBRQK"[int(k)]; }

// castling-rights bits
constexpr std::uint8_t kWhiteKingside = 1;
constexpr std::uint8_t kWhiteQueenside = 2;
constexpr std::uint8_t kBlackKingside = 4;
constexpr std::uint8_t kBlackQueenside = 8;

struct Move {
  std::uint8_t from = 0, to = 0;
  std::int8_t promo = -1;  // Kind index, or -1
  bool capture = false;
  bool castle = false;
  bool en_passant = false;
  bool double_push = false;

  friend bool operator==(const Move& a, const Move& b) {
    return a.from == b.from && a.to == b.to && a.promo == b.promo;
  }
};

inline bool move_order(const Move& a, const Move& b) {
  if (a.from != b.from) return a.from < b.from;
  if (a.to != b.to) return a.to < b.to;
  return a.promo < b.promo;
}

struct Board {
  std::array<std::int8_t, 64> sq{};
  Color stm = Color::White;
  std::uint8_t castling = 0;
  std::int8_t ep = -1;  // en-passant target square, or -1
  int halfmove = 0;
  int fullmove = 1;

  static Board initial() {
    Board b;
    constexpr Kind back[8] = {Kind::Rook, Kind::Knight, Kind::Bishop, Kind::Queen,
                              Kind::King, Kind::Bishop, Kind::Knight, Kind::Rook};
    for (int f = 0; f < 8; ++f) {
      b.sq[make_square(f, 0)] = piece(Color::White, back[f]);
      b.sq[make_square(f, 1)] = piece(Color::White, Kind::Pawn);
      b.sq[make_square(f, 6)] = piece(Color::Black, Kind::Pawn);
      b.sq[make_square(f, 7)] = piece(Color::Black, back[f]);
    }
    b.castling = kWhiteKingside | kWhiteQueenside | kBlackKingside | kBlackQueenside;
    return b;
  }

  int king_square(Color c) const {
    std::int8_t k = piece(c, Kind::King);
    for (int s = 0; s < 64; ++s)
      if (sq[s] == k) return s;
    return -1;
  }
};

namespace detail {

constexpr int kKnightDf[8] = {1, 2, 2, 1, -1, -2, -2, -1};
constexpr int kKnightDr[8] = {2, 1, -1, -2, -2, -1, 1, 2};
constexpr int kKingDf[8] = {1, 1, 1, 0, 0, -1, -1, -1};
constexpr int kKingDr[8] = {1, 0, -1, 1, -1, 1, 0, -1};
constexpr int kBishopDf[4] = {1, 1, -1, -1};
constexpr int kBishopDr[4] = {1, -1, 1, -1};
constexpr int kRookDf[4] = {1, -1, 0, 0};
constexpr int kRookDr[4] = {0, 0, 1, -1};

}  // namespace detail

// Target-centric attack test: scans outward from s for attackers of the given
// color. Kept independent from the attacker-centric piece_attacks below so the
// two can cross-check each other.
inline bool square_attacked(const Board& b, int s, Color by) {
  using namespace detail;
  int f = file_of(s), r = rank_of(s);

  // pawns: a white pawn on (f±1, r-1) attacks s
  int pr = by == Color::White ? r - 1 : r + 1;
  for (int df : {-1, 1}) {
    if (on_board(f + df, pr) && b.sq[make_square(f + df, pr)] == piece(by, Kind::Pawn))
      return true;
  }
  for (int i = 0; i < 8; ++i) {
    int nf = f + kKnightDf[i], nr = r + kKnightDr[i];
    if (on_board(nf, nr) && b.sq[make_square(nf, nr)] == piece(by, Kind::Knight)) return true;
  }
  for (int i = 0; i < 8; ++i) {
    int nf = f + kKingDf[i], nr = r + kKingDr[i];
    if (on_board(nf, nr) && b.sq[make_square(nf, nr)] == piece(by, Kind::King)) return true;
  }
  for (int i = 0; i < 4; ++i) {
    int nf = f + kBishopDf[i], nr = r + kBishopDr[i];
    while (on_board(nf, nr)) {
      std::int8_t p = b.sq[make_square(nf, nr)];
      if (p != 0) {
        if (is_color(p, by) && (kind_of(p) == Kind::Bishop || kind_of(p) == Kind::Queen))
          return true;
        break;
      }
      nf += kBishopDf[i];
      nr += kBishopDr[i];
    }
  }
  for (int i = 0; i < 4; ++i) {
    int nf = f + kRookDf[i], nr = r + kRookDr[i];
    while (on_board(nf, nr)) {
      std::int8_t p = b.sq[make_square(nf, nr)];
      if (p != 0) {
        if (is_color(p, by) && (kind_of(p) == Kind::Rook || kind_of(p) == Kind::Queen))
          return true;
        break;
      }
      nf += kRookDf[i];
      nr += kRookDr[i];
    }
  }
  return false;
}

// Attacker-centric: bitboard of squares attacked by the piece on `from`
// (capture pattern; for pawns these are the two diagonal squares).
inline std::uint64_t piece_attacks(const Board& b, int from) {
  using namespace detail;
  std::int8_t p = b.sq[from];
  if (p == 0) return 0;
  Color c = p > 0 ? Color::White : Color::Black;
  Kind k = kind_of(p);
  int f = file_of(from), r = rank_of(from);
  std::uint64_t out = 0;
  auto mark = [&](int nf, int nr) {
    if (on_board(nf, nr)) out |= std::uint64_t(1) << make_square(nf, nr);
  };
  switch (k) {
    case Kind::Pawn: {
      int dr = c == Color::White ? 1 : -1;
      mark(f - 1, r + dr);
      mark(f + 1, r + dr);
      break;
    }
    case Kind::Knight:
      for (int i = 0; i < 8; ++i) mark(f + kKnightDf[i], r + kKnightDr[i]);
      break;
    case Kind::King:
      for (int i = 0; i < 8; ++i) mark(f + kKingDf[i], r + kKingDr[i]);
      break;
    case Kind::Bishop:
    case Kind::Rook:
    case Kind::Queen: {
      bool diag = k != Kind::Rook;
      bool ortho = k != Kind::Bishop;
      if (diag)
        for (int i = 0; i < 4; ++i) {
          int nf = f + kBishopDf[i], nr = r + kBishopDr[i];
          while (on_board(nf, nr)) {
            out |= std::uint64_t(1) << make_square(nf, nr);
            if (b.sq[make_square(nf, nr)] != 0) break;
            nf += kBishopDf[i];
            nr += kBishopDr[i];
          }
        }
      if (ortho)
        for (int i = 0; i < 4; ++i) {
          int nf = f + kRookDf[i], nr = r + kRookDr[i];
          while (on_board(nf, nr)) {
            out |= std::uint64_t(1) << make_square(nf, nr);
            if (b.sq[make_square(nf, nr)] != 0) break;
            nf += kRookDf[i];
            nr += kRookDr[i];
          }
        }
      break;
    }
  }
  return out;
}

inline std::uint64_t attack_map(const Board& b, Color by) {
  std::uint64_t out = 0;
  for (int s = 0; s < 64; ++s)
    if (b.sq[s] != 0 && is_color(b.sq[s], by)) out |= piece_attacks(b, s);
  return out;
}

inline bool in_check(const Board& b, Color c) {
  int ks = b.king_square(c);
  return ks >= 0 && square_attacked(b, ks, opponent(c));
}

inline void validate(const Board& b) {
  int wk = 0, bk = 0;
  for (int s = 0; s < 64; ++s) {
    if (b.sq[s] == piece(Color::White, Kind::King)) ++wk;
    if (b.sq[s] == piece(Color::Black, Kind::King)) ++bk;
  }
  require(wk == 1 && bk == 1, ErrorKind::State, "board must have exactly one king per color");
  if (b.ep >= 0)
    require(rank_of(b.ep) == 2 || rank_of(b.ep) == 5, ErrorKind::State,
            "en-passant target must lie on rank 3 or 6");
  auto right_ok = [&](std::uint8_t bit, int king, int rook, Color c) {
    if (!(b.castling & bit)) return true;
    return b.sq[king] == piece(c, Kind::King) && b.sq[rook] == piece(c, Kind::Rook);
  };
  bool rights_ok = right_ok(kWhiteKingside, 4, 7, Color::White) &&
                   right_ok(kWhiteQueenside, 4, 0, Color::White) &&
                   right_ok(kBlackKingside, 60, 63, Color::Black) &&
                   right_ok(kBlackQueenside, 60, 56, Color::Black);
  require(rights_ok, ErrorKind::State, "castling right without king/rook on start squares");
}

inline Board apply_move(const Board& b, const Move& m) {
  Board r = b;
  std::int8_t moving = b.sq[m.from];
  Color c = b.stm;

  if (kind_of(moving) == Kind::Pawn || m.capture)
    r.halfmove = 0;
  else
    r.halfmove = b.halfmove + 1;

  r.ep = -1;
  if (m.en_passant) {
    int captured = make_square(file_of(m.to), rank_of(m.from));
    r.sq[captured] = 0;
  }
  r.sq[m.to] = m.promo >= 0 ? piece(c, Kind(m.promo)) : moving;
  r.sq[m.from] = 0;

  if (m.castle) {
    switch (m.to) {
      case 6:  r.sq[5] = r.sq[7];   r.sq[7] = 0;  break;  // g1
      case 2:  r.sq[3] = r.sq[0];   r.sq[0] = 0;  break;  // c1
      case 62: r.sq[61] = r.sq[63]; r.sq[63] = 0; break;  // g8
      case 58: r.sq[59] = r.sq[56]; r.sq[56] = 0; break;  // c8
    }
  }
  if (m.double_push) r.ep = std::int8_t((m.from + m.to) / 2);

  if (kind_of(moving) == Kind::King) {
    r.castling &= c == Color::White ? std::uint8_t(~(kWhiteKingside | kWhiteQueenside))
                                    : std::uint8_t(~(kBlackKingside | kBlackQueenside));
  }
  auto clear_rook_right = [&](int s) {
    switch (s) {
      case 7:  r.castling &= std::uint8_t(~kWhiteKingside);  break;
      case 0:  r.castling &= std::uint8_t(~kWhiteQueenside); break;
      case 63: r.castling &= std::uint8_t(~kBlackKingside);  break;
      case 56: r.castling &= std::uint8_t(~kBlackQueenside); break;
    }
  };
  clear_rook_right(m.from);
  clear_rook_right(m.to);

  if (c == Color::Black) r.fullmove = b.fullmove + 1;
  r.stm = opponent(c);
  return r;
}

namespace detail {

inline void push_pawn_targets(std::vector<Move>& out, int from, int to, bool capture,
                              bool en_passant, bool double_push, Color c) {
  int promo_rank = c == Color::White ? 7 : 0;
  if (rank_of(to) == promo_rank) {
    for (Kind k : {Kind::Knight, Kind::Bishop, Kind::Rook, Kind::Queen}) {
      Move m;
      m.from = std::uint8_t(from);
      m.to = std::uint8_t(to);
      m.promo = std::int8_t(int(k));
      m.capture = capture;
      out.push_back(m);
    }
  } else {
    Move m;
    m.from = std::uint8_t(from);
    m.to = std::uint8_t(to);
    m.capture = capture;
    m.en_passant = en_passant;
    m.double_push = double_push;
    out.push_back(m);
  }
}

inline std::vector<Move> pseudo_legal_moves(const Board& b) {
  using namespace detail;
  std::vector<Move> out;
  out.reserve(48);
  Color c = b.stm;
  Color opp = opponent(c);
  for (int from = 0; from < 64; ++from) {
    std::int8_t p = b.sq[from];
    if (p == 0 || !is_color(p, c)) continue;
    Kind k = kind_of(p);
    int f = file_of(from), r = rank_of(from);
    if (k == Kind::Pawn) {
      int dr = c == Color::White ? 1 : -1;
      int start_rank = c == Color::White ? 1 : 6;
      int one = make_square(f, r + dr);
      if (b.sq[one] == 0) {
        push_pawn_targets(out, from, one, false, false, false, c);
        if (r == start_rank) {
          int two = make_square(f, r + 2 * dr);
          if (b.sq[two] == 0) push_pawn_targets(out, from, two, false, false, true, c);
        }
      }
      for (int df : {-1, 1}) {
        if (!on_board(f + df, r + dr)) continue;
        int to = make_square(f + df, r + dr);
        if (b.sq[to] != 0 && is_color(b.sq[to], opp))
          push_pawn_targets(out, from, to, true, false, false, c);
        else if (to == b.ep)
          push_pawn_targets(out, from, to, true, true, false, c);
      }
    } else if (k == Kind::Knight || k == Kind::King) {
      const int* dfs = k == Kind::Knight ? kKnightDf : kKingDf;
      const int* drs = k == Kind::Knight ? kKnightDr : kKingDr;
      for (int i = 0; i < 8; ++i) {
        int nf = f + dfs[i], nr = r + drs[i];
        if (!on_board(nf, nr)) continue;
        int to = make_square(nf, nr);
        if (b.sq[to] != 0 && is_color(b.sq[to], c)) continue;
        Move m;
        m.from = std::uint8_t(from);
        m.to = std::uint8_t(to);
        m.capture = b.sq[to] != 0;
        out.push_back(m);
      }
    } else {
      bool diag = k != Kind::Rook;
      bool ortho = k != Kind::Bishop;
      auto slide = [&](const int* dfs, const int* drs) {
        for (int i = 0; i < 4; ++i) {
          int nf = f + dfs[i], nr = r + drs[i];
          while (on_board(nf, nr)) {
            int to = make_square(nf, nr);
            if (b.sq[to] != 0 && is_color(b.sq[to], c)) break;
            Move m;
            m.from = std::uint8_t(from);
            m.to = std::uint8_t(to);
            m.capture = b.sq[to] != 0;
            out.push_back(m);
            if (b.sq[to] != 0) break;
            nf += dfs[i];
            nr += drs[i];
          }
        }
      };
      if (diag) slide(kBishopDf, kBishopDr);
      if (ortho) slide(kRookDf, kRookDr);
    }
  }

  // castling
  auto try_castle = [&](std::uint8_t right, int king_from, int king_to, int empty_lo,
                        int empty_hi, int pass_sq) {
    if (!(b.castling & right)) return;
    if (b.sq[king_from] != piece(c, Kind::King)) return;
    for (int s = empty_lo; s <= empty_hi; ++s)
      if (b.sq[s] != 0) return;
    if (square_attacked(b, king_from, opp)) return;
    if (square_attacked(b, pass_sq, opp)) return;
    if (square_attacked(b, king_to, opp)) return;
    Move m;
    m.from = std::uint8_t(king_from);
    m.to = std::uint8_t(king_to);
    m.castle = true;
    out.push_back(m);
  };
  if (c == Color::White) {
    try_castle(kWhiteKingside, 4, 6, 5, 6, 5);
    try_castle(kWhiteQueenside, 4, 2, 1, 3, 3);
  } else {
    try_castle(kBlackKingside, 60, 62, 61, 62, 61);
    try_castle(kBlackQueenside, 60, 58, 57, 59, 59);
  }
  return out;
}

}  // namespace detail

// Exactly the FIDE-legal moves, ordered by (from, to, promotion kind).
inline std::vector<Move> legal_moves(const Board& b) {
  validate(b);
  std::vector<Move> out;
  for (const Move& m : detail::pseudo_legal_moves(b)) {
    Board nb = apply_move(b, m);
    if (!in_check(nb, b.stm)) out.push_back(m);
  }
  std::sort(out.begin(), out.end(), move_order);
  return out;
}

inline std::uint64_t perft(const Board& b, int depth) {
  require(depth >= 0, ErrorKind::Index, "perft: negative depth");
  if (depth == 0) return 1;
  std::uint64_t n = 0;
  for (const Move& m : legal_moves(b)) {
    if (depth == 1)
      n += 1;
    else
      n += perft(apply_move(b, m), depth - 1);
  }
  return n;
}

// SAN for a legal move, with minimal disambiguation and +/# suffix.
inline std::string to_san(const Board& b, const Move& m) {
  std::string s;
  Kind k = kind_of(b.sq[m.from]);
  if (m.castle) {
    s = file_of(m.to) == 6 ? "O-O" : "O-O-O";
  } else if (k == Kind::Pawn) {
    if (m.capture) {
      s += char('a' + file_of(m.from));
      s += 'x';
    }
    s += square_name(m.to);
    if (m.promo >= 0) {
      s += '=';
      s += kind_letter(Kind(m.promo));
    }
  } else {
    s += kind_letter(k);
    // minimal disambiguation against other legal moves of the same kind/target
    bool need_file = false, need_rank = false, any = false;
    for (const Move& o : legal_moves(b)) {
      if (o.from == m.from) continue;
      if (o.to != m.to || kind_of(b.sq[o.from]) != k) continue;
      any = true;
      if (file_of(o.from) == file_of(m.from)) need_rank = true;
      if (rank_of(o.from) == rank_of(m.from)) need_file = true;
    }
    if (any && !need_file && !need_rank) need_file = true;
    if (need_file) s += char('a' + file_of(m.from));
    if (need_rank) s += char('1' + rank_of(m.from));
    if (m.capture) s += 'x';
    s += square_name(m.to);
  }
  Board nb = apply_move(b, m);
  if (in_check(nb, nb.stm)) s += legal_moves(nb).empty() ? '#' : '+';
  return s;
}

// Resolves SAN against the legal moves of b. Throws Parse for malformed text,
// Legality when nothing matches, Ambiguity when several moves match.
// Error offsets are relative to the start of `san`.
inline Move move_from_san(const Board& b, std::string_view san) {
  require(!san.empty(), ErrorKind::Parse, "empty SAN token", 0);
  std::string_view body = san;
  while (!body.empty() && (body.back() == '+' || body.back() == '#' || body.back() == '!' ||
                           body.back() == '?'))
    body.remove_suffix(1);
  require(!body.empty(), ErrorKind::Parse, "SAN token has no move text", 0);

  std::vector<Move> legal = legal_moves(b);

  if (body == "O-O" || body == "0-0" || body == "O-O-O" || body == "0-0-0") {
    bool kingside = body.size() == 3;
    for (const Move& m : legal)
      if (m.castle && (file_of(m.to) == 6) == kingside) return m;
    fail(ErrorKind::Legality, std::string("illegal castle: ") + std::string(san), 0);
  }

  std::size_t i = 0;
  Kind k = Kind::Pawn;
  if (std::string_view("NBRQK").find(body[0]) != std::string_view::npos) {
    k = body[0] == 'N'   ? Kind::Knight
        : body[0] == 'B' ? Kind::Bishop
        : body[0] == 'R' ? Kind::Rook
        : body[0] == 'Q' ? Kind::Queen
                         : Kind::King;
    i = 1;
  }

  int promo = -1;
  std::size_t eq = body.find('=');
  if (eq != std::string_view::npos) {
    require(k == Kind::Pawn, ErrorKind::Parse, "promotion on a non-pawn move", long(eq));
    require(eq + 2 == body.size(), ErrorKind::Parse, "bad promotion suffix", long(eq));
    char pc = body[eq + 1];
    switch (pc) {
      case 'N': promo = int(Kind::Knight); break;
      case 'B': promo = int(Kind::Bishop); break;
      case 'R': promo = int(Kind::Rook); break;
      case 'Q': promo = int(Kind::Queen); break;
      default: fail(ErrorKind::Parse, "bad promotion piece", long(eq + 1));
    }
    body = body.substr(0, eq);
  }

  bool wants_capture = false;
  std::string core;  // disambiguation + destination, x removed
  for (std::size_t j = i; j < body.size(); ++j) {
    char c = body[j];
    if (c == 'x') {
      require(!wants_capture, ErrorKind::Parse, "duplicate capture marker", long(j));
      wants_capture = true;
    } else if ((c >= 'a' && c <= 'h') || (c >= '1' && c <= '8')) {
      core += c;
    } else {
      fail(ErrorKind::Parse, std::string("unexpected character '") + c + "' in SAN", long(j));
    }
  }
  require(core.size() >= 2 && core.size() <= 4, ErrorKind::Parse, "malformed SAN body", 0);
  std::string dest = core.substr(core.size() - 2);
  require(dest[0] >= 'a' && dest[0] <= 'h' && dest[1] >= '1' && dest[1] <= '8',
          ErrorKind::Parse, "malformed destination square", long(i));
  int to = make_square(dest[0] - 'a', dest[1] - '1');
  std::string disamb = core.substr(0, core.size() - 2);
  int want_file = -1, want_rank = -1;
  for (char c : disamb) {
    if (c >= 'a' && c <= 'h')
      want_file = c - 'a';
    else
      want_rank = c - '1';
  }

  std::vector<Move> matches;
  for (const Move& m : legal) {
    if (m.castle) continue;
    if (kind_of(b.sq[m.from]) != k) continue;
    if (int(m.to) != to) continue;
    if (int(m.promo) != promo) continue;
    if (m.capture != wants_capture) continue;
    if (want_file >= 0 && file_of(m.from) != want_file) continue;
    if (want_rank >= 0 && rank_of(m.from) != want_rank) continue;
    matches.push_back(m);
  }
  if (matches.empty())
    fail(ErrorKind::Legality, "no legal move matches SAN '" + std::string(san) + "'", 0);
  if (matches.size() > 1)
    fail(ErrorKind::Ambiguity, "SAN '" + std::string(san) + "' matches several moves", 0);
  return matches[0];
}

inline Board apply_san(const Board& b, std::string_view san) {
  return apply_move(b, move_from_san(b, san));
}

struct PgnGame {
  std::string text;
  std::vector<std::string> sans;
  std::vector<std::size_t> period_offsets;  // '.' positions in text, strictly increasing
};

// Parses compact movetext ("1.e4 e5 2.Nf3 ...", optional leading ';' and
// trailing result token) and validates it by full replay.
inline PgnGame parse_pgn(std::string_view text) {
  PgnGame g;
  g.text = std::string(text);
  Board b = Board::initial();

  std::size_t i = 0;
  const std::size_t n = text.size();
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; };
  if (i < n && text[i] == ';') ++i;

  // errors carry the offset of the offending token
  auto apply_token = [&](std::string_view san, std::size_t tok_start) {
    try {
      Move m = move_from_san(b, san);
      b = apply_move(b, m);
    } catch (const Error& e) {
      std::string msg = "move " + std::to_string(g.sans.size()) + " ('" + std::string(san) +
                        "'): " + e.what();
      throw Error(e.kind(), msg, long(tok_start));
    }
    g.sans.emplace_back(san);
  };

  while (i < n) {
    while (i < n && is_space(text[i])) ++i;
    if (i >= n) break;
    std::size_t tok_start = i;
    while (i < n && !is_space(text[i])) ++i;
    std::string_view tok = text.substr(tok_start, i - tok_start);

    if (tok == "1-0" || tok == "0-1" || tok == "1/2-1/2" || tok == "*") {
      while (i < n && is_space(text[i])) ++i;
      require(i >= n, ErrorKind::Parse, "text after result token", long(i));
      break;
    }

    if (std::isdigit(static_cast<unsigned char>(tok[0]))) {
      std::size_t j = 0;
      while (j < tok.size() && std::isdigit(static_cast<unsigned char>(tok[j]))) ++j;
      require(j < tok.size() && tok[j] == '.', ErrorKind::Parse,
              "expected '.' after move number", long(tok_start + j));
      int num = 0;
      for (std::size_t d = 0; d < j; ++d) num = num * 10 + (tok[d] - '0');
      require(b.stm == Color::White, ErrorKind::Parse, "move number while black to move",
              long(tok_start));
      require(num == b.fullmove, ErrorKind::Parse,
              "move number " + std::to_string(num) + " but expected " +
                  std::to_string(b.fullmove),
              long(tok_start));
      g.period_offsets.push_back(tok_start + j);
      std::string_view rest = tok.substr(j + 1);
      if (!rest.empty()) {
        require(rest[0] != '.', ErrorKind::Parse, "'...' continuations are not supported",
                long(tok_start + j + 1));
        apply_token(rest, tok_start + j + 1);
      }
    } else {
      apply_token(tok, tok_start);
    }
  }
  return g;
}

// One snapshot per '.', taken before white's move of that number; at every
// snapshot it is white's turn.
inline std::vector<std::pair<std::size_t, Board>> boards_at_periods(const PgnGame& g) {
  std::vector<std::pair<std::size_t, Board>> out;
  out.reserve(g.period_offsets.size());
  Board b = Board::initial();
  std::size_t applied = 0;
  for (std::size_t p = 0; p < g.period_offsets.size(); ++p) {
    std::size_t target = 2 * p;
    while (applied < target) {
      b = apply_san(b, g.sans[applied]);
      ++applied;
    }
    out.emplace_back(g.period_offsets[p], b);
  }
  return out;
}

// Debug helper only; FEN import is intentionally not provided.
inline std::string to_fen(const Board& b) {
  std::string out;
  for (int r = 7; r >= 0; --r) {
    int run = 0;
    for (int f = 0; f < 8; ++f) {
      std::int8_t p = b.sq[make_square(f, r)];
      if (p == 0) {
        ++run;
        continue;
      }
      if (run) out += char('0' + run), run = 0;
      char c = kind_letter(kind_of(p));
      out += p > 0 ? c : char(std::tolower(c));
    }
    if (run) out += char('0' + run);
    if (r) out += '/';
  }
  out += b.stm == Color::White ? " w " : " b ";
  if (!b.castling)
    out += '-';
  else {
    if (b.castling & kWhiteKingside) out += 'K';
    if (b.castling & kWhiteQueenside) out += 'Q';
    if (b.castling & kBlackKingside) out += 'k';
    if (b.castling & kBlackQueenside) out += 'q';
  }
  out += ' ';
  out += b.ep >= 0 ? square_name(b.ep) : "-";
  out += ' ' + std::to_string(b.halfmove) + ' ' + std::to_string(b.fullmove);
  return out;
}

}  // namespace boardsae::chess
