#pragma once

#include <stdexcept>
#include <string>

namespace boardsae {

enum class ErrorKind {
  Parse,      // malformed input text
  Legality,   // game-rule violation
  Ambiguity,  // underspecified SAN
  Dimension,  // shape mismatch
  Numeric,    // non-finite values, divergence
  Format,     // bad file bytes
  State,      // invariant-violating domain value
  Index,      // out-of-range position
  Vocab,      // symbol outside model vocabulary
  Config,     // bad experiment configuration
  Data,       // degenerate or insufficient data
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Legality: return "legality";
    case ErrorKind::Ambiguity: return "ambiguity";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Format: return "format";
    case ErrorKind::State: return "state";
    case ErrorKind::Index: return "index";
    case ErrorKind::Vocab: return "vocab";
    case ErrorKind::Config: return "config";
    case ErrorKind::Data: return "data";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg, long offset = -1)
      : std::runtime_error(msg), kind_(kind), offset_(offset) {}

  ErrorKind kind() const noexcept { return kind_; }
  // Character/byte offset into the offending input, or -1 when not meaningful.
  long offset() const noexcept { return offset_; }

 private:
  ErrorKind kind_;
  long offset_;
};

[[noreturn]] inline void fail(ErrorKind k, const std::string& msg, long offset = -1) {
  throw Error(k, msg, offset);
}

inline void require(bool cond, ErrorKind k, const std::string& msg, long offset = -1) {
  if (!cond) fail(k, msg, offset);
}

}  // namespace boardsae
