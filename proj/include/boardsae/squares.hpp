#pragma once

#include <string>
#include <string_view>

#include "boardsae/errors.hpp"

namespace boardsae {

// Shared 8x8 indexing: square = file + 8*rank, a1 = 0, h1 = 7, a8 = 56, h8 = 63.
inline constexpr int make_square(int file, int rank) { return rank * 8 + file; }
inline constexpr int file_of(int sq) { return sq & 7; }
inline constexpr int rank_of(int sq) { return sq >> 3; }
inline constexpr bool on_board(int file, int rank) {
  return file >= 0 && file < 8 && rank >= 0 && rank < 8;
}

inline std::string square_name(int sq) {
  std::string s(2, '?');
  s[0] = char('a' + file_of(sq));
  s[1] = char('1' + rank_of(sq));
  return s;
}

inline int parse_square(std::string_view name, long offset = -1) {
  require(name.size() == 2, ErrorKind::Parse, "bad square name", offset);
  int f = name[0] - 'a';
  int r = name[1] - '1';
  require(on_board(f, r), ErrorKind::Parse, "square off board: " + std::string(name), offset);
  return make_square(f, r);
}

}  // namespace boardsae
