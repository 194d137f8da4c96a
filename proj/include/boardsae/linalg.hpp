#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "boardsae/errors.hpp"

namespace boardsae {

using Vec = std::vector<double>;

// Dense row-major matrix of 64-bit floats.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), a(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return a[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

  std::size_t size() const { return a.size(); }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }
};

inline bool all_finite(const Matrix& m) {
  for (double v : m.a)
    if (!std::isfinite(v)) return false;
  return true;
}

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// Fixed i-k-j loop order; summation order is part of the contract so results
// are reproducible for a given build.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols == b.rows, ErrorKind::Dimension, "matmul: inner dimensions disagree");
  Matrix c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double* arow = &a.a[i * a.cols];
    double* crow = &c.a[i * b.cols];
    for (std::size_t k = 0; k < a.cols; ++k) {
      double aik = arow[k];
      if (aik == 0.0) continue;
      const double* brow = &b.a[k * b.cols];
      for (std::size_t j = 0; j < b.cols; ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

inline Matrix transpose(const Matrix& m) {
  Matrix t(m.cols, m.rows);
  for (std::size_t i = 0; i < m.rows; ++i)
    for (std::size_t j = 0; j < m.cols; ++j) t(j, i) = m(i, j);
  return t;
}

inline void add_inplace(Matrix& x, const Matrix& y) {
  require(x.same_shape(y), ErrorKind::Dimension, "add: shape mismatch");
  for (std::size_t i = 0; i < x.a.size(); ++i) x.a[i] += y.a[i];
}

inline void sub_inplace(Matrix& x, const Matrix& y) {
  require(x.same_shape(y), ErrorKind::Dimension, "sub: shape mismatch");
  for (std::size_t i = 0; i < x.a.size(); ++i) x.a[i] -= y.a[i];
}

inline void scale_inplace(Matrix& x, double s) {
  for (double& v : x.a) v *= s;
}

inline double dot(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), ErrorKind::Dimension, "dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline Matrix random_gaussian(std::size_t r, std::size_t c, std::mt19937_64& rng, double stddev = 1.0) {
  Matrix m(r, c);
  std::normal_distribution<double> dist(0.0, stddev);
  for (double& v : m.a) v = dist(rng);
  return m;
}

// Columns drawn from an isotropic Gaussian and normalized to unit L2 norm.
inline Matrix random_unit_columns(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix m = random_gaussian(rows, cols, rng);
  for (std::size_t j = 0; j < cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < rows; ++i) s += m(i, j) * m(i, j);
    s = std::sqrt(s);
    if (s == 0.0) {
      m(0, j) = 1.0;
      s = 1.0;
    }
    for (std::size_t i = 0; i < rows; ++i) m(i, j) /= s;
  }
  return m;
}

struct AdamState {
  Matrix m, v;  // first/second moment buffers, shape-matched to the parameter
  long step = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  AdamState() = default;
  AdamState(std::size_t rows, std::size_t cols) : m(rows, cols), v(rows, cols) {}
};

// Standard Adam update with bias correction. Mutates param and state.
inline void adam_step(Matrix& param, const Matrix& grad, AdamState& st, double lr) {
  require(param.same_shape(grad), ErrorKind::Dimension, "adam_step: grad shape mismatch");
  require(st.m.same_shape(param) && st.v.same_shape(param), ErrorKind::Dimension,
          "adam_step: state shape mismatch");
  require(lr > 0.0, ErrorKind::Numeric, "adam_step: lr must be positive");
  require(all_finite(grad), ErrorKind::Numeric, "adam_step: non-finite gradient");

  st.step += 1;
  const double c1 = 1.0 - std::pow(st.beta1, double(st.step));
  const double c2 = 1.0 - std::pow(st.beta2, double(st.step));
  for (std::size_t i = 0; i < param.a.size(); ++i) {
    double g = grad.a[i];
    st.m.a[i] = st.beta1 * st.m.a[i] + (1.0 - st.beta1) * g;
    st.v.a[i] = st.beta2 * st.v.a[i] + (1.0 - st.beta2) * g * g;
    double mhat = st.m.a[i] / c1;
    double vhat = st.v.a[i] / c2;
    param.a[i] -= lr * mhat / (std::sqrt(vhat) + st.eps);
  }
}

}  // namespace boardsae
