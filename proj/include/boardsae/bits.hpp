#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <vector>

#include "boardsae/errors.hpp"

namespace boardsae {

// Fixed-width bit vector, LSB-first within each 64-bit word.
class BitVec {
 public:
  BitVec() = default;
  explicit BitVec(std::size_t bits) : bits_(bits), w_((bits + 63) / 64, 0) {}

  std::size_t size() const { return bits_; }

  bool get(std::size_t i) const { return (w_[i >> 6] >> (i & 63)) & 1u; }

  void set(std::size_t i, bool v = true) {
    std::uint64_t mask = std::uint64_t(1) << (i & 63);
    if (v)
      w_[i >> 6] |= mask;
    else
      w_[i >> 6] &= ~mask;
  }

  std::size_t count() const {
    std::size_t c = 0;
    for (std::uint64_t w : w_) c += std::size_t(std::popcount(w));
    return c;
  }

  const std::vector<std::uint64_t>& words() const { return w_; }
  std::vector<std::uint64_t>& words() { return w_; }

  friend bool operator==(const BitVec& a, const BitVec& b) {
    return a.bits_ == b.bits_ && a.w_ == b.w_;
  }

 private:
  std::size_t bits_ = 0;
  std::vector<std::uint64_t> w_;
};

inline std::size_t and_count(const BitVec& a, const BitVec& b) {
  require(a.size() == b.size(), ErrorKind::Dimension, "bit vector length mismatch");
  std::size_t c = 0;
  for (std::size_t i = 0; i < a.words().size(); ++i)
    c += std::size_t(std::popcount(a.words()[i] & b.words()[i]));
  return c;
}

// Row-major matrix of bits; every row has the same bit length.
class BitRows {
 public:
  BitRows() = default;
  BitRows(std::size_t rows, std::size_t bits)
      : rows_(rows), bits_(bits), wpr_((bits + 63) / 64), w_(rows * ((bits + 63) / 64), 0) {}

  std::size_t rows() const { return rows_; }
  std::size_t bits() const { return bits_; }
  std::size_t words_per_row() const { return wpr_; }

  bool get(std::size_t r, std::size_t i) const {
    return (w_[r * wpr_ + (i >> 6)] >> (i & 63)) & 1u;
  }

  void set(std::size_t r, std::size_t i, bool v = true) {
    std::uint64_t mask = std::uint64_t(1) << (i & 63);
    std::uint64_t& word = w_[r * wpr_ + (i >> 6)];
    if (v)
      word |= mask;
    else
      word &= ~mask;
  }

  void set_row(std::size_t r, const BitVec& row) {
    require(row.size() == bits_, ErrorKind::Dimension, "row bit length mismatch");
    for (std::size_t k = 0; k < wpr_; ++k) w_[r * wpr_ + k] = row.words()[k];
  }

  BitVec row(std::size_t r) const {
    BitVec out(bits_);
    for (std::size_t k = 0; k < wpr_; ++k) out.words()[k] = w_[r * wpr_ + k];
    return out;
  }

  std::size_t row_count_ones(std::size_t r) const {
    std::size_t c = 0;
    for (std::size_t k = 0; k < wpr_; ++k) c += std::size_t(std::popcount(w_[r * wpr_ + k]));
    return c;
  }

  // One mask over rows for a fixed column: out.get(r) == get(r, col).
  BitVec column(std::size_t col) const {
    BitVec out(rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      if (get(r, col)) out.set(r);
    return out;
  }

  const std::vector<std::uint64_t>& raw_words() const { return w_; }
  std::vector<std::uint64_t>& raw_words() { return w_; }

  friend bool operator==(const BitRows& a, const BitRows& b) {
    return a.rows_ == b.rows_ && a.bits_ == b.bits_ && a.w_ == b.w_;
  }

 private:
  std::size_t rows_ = 0, bits_ = 0, wpr_ = 0;
  std::vector<std::uint64_t> w_;
};

}  // namespace boardsae
