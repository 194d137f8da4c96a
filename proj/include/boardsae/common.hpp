#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "boardsae/errors.hpp"

namespace boardsae {

enum class GameKind : std::uint8_t { Chess = 0, Othello = 1, Synthetic = 2 };

inline const char* game_kind_name(GameKind g) {
  switch (g) {
    case GameKind::Chess: return "chess";
    case GameKind::Othello: return "othello";
    case GameKind::Synthetic: return "synthetic";
  }
  return "?";
}

inline GameKind parse_game_kind(std::string_view s) {
  if (s == "chess") return GameKind::Chess;
  if (s == "othello") return GameKind::Othello;
  if (s == "synthetic" || s == "synth") return GameKind::Synthetic;
  fail(ErrorKind::Config, "unknown game kind: " + std::string(s));
}

// FNV-1a, used for catalog and input-file fingerprints (not cryptographic).
inline std::uint64_t fnv1a_bytes(const void* data, std::size_t len,
                                 std::uint64_t h = 0xcbf29ce484222325ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ull) {
  return fnv1a_bytes(s.data(), s.size(), h);
}

}  // namespace boardsae
