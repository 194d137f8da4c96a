#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "boardsae/linalg.hpp"

using namespace boardsae;

TEST_CASE("matmul identity and zero") {
  std::mt19937_64 rng(1);
  Matrix m = random_gaussian(3, 5, rng);
  Matrix id = Matrix::identity(3);
  Matrix prod = matmul(id, m);
  REQUIRE(prod.a == m.a);

  Matrix z(4, 3);
  Matrix zprod = matmul(z, m);
  for (double v : zprod.a) REQUIRE(v == 0.0);
}

TEST_CASE("matmul hand example") {
  Matrix a(2, 2);
  a(0, 0) = 1;
  a(0, 1) = 2;
  a(1, 0) = 3;
  a(1, 1) = 4;
  Matrix b(2, 1, 1.0);
  Matrix c = matmul(a, b);
  REQUIRE(c(0, 0) == 3.0);
  REQUIRE(c(1, 0) == 7.0);
}

TEST_CASE("matmul rejects shape mismatch") {
  Matrix a(2, 3), b(2, 3);
  REQUIRE_THROWS_AS(matmul(a, b), Error);
}

TEST_CASE("matmul associativity within tolerance") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix a = random_gaussian(4, 3, rng);
    Matrix b = random_gaussian(3, 5, rng);
    Matrix c = random_gaussian(5, 2, rng);
    Matrix left = matmul(matmul(a, b), c);
    Matrix right = matmul(a, matmul(b, c));
    for (std::size_t i = 0; i < left.a.size(); ++i) {
      double denom = std::max(1.0, std::abs(left.a[i]));
      REQUIRE(std::abs(left.a[i] - right.a[i]) / denom < 1e-9);
    }
  }
}

TEST_CASE("adam first step is approximately lr times sign") {
  Matrix p(1, 1);
  p(0, 0) = 1.0;
  Matrix g(1, 1);
  g(0, 0) = 1.0;
  AdamState st(1, 1);
  adam_step(p, g, st, 0.1);
  // bias-corrected first step: lr * g / (|g| + eps)
  REQUIRE(p(0, 0) == Catch::Approx(0.9).margin(1e-7));
  REQUIRE(st.step == 1);
}

TEST_CASE("adam with zero gradients is the identity for any step count") {
  std::mt19937_64 rng(3);
  Matrix p = random_gaussian(2, 3, rng);
  Matrix orig = p;
  Matrix zero(2, 3);
  AdamState st(2, 3);
  for (int i = 0; i < 17; ++i) adam_step(p, zero, st, 0.5);
  REQUIRE(p.a == orig.a);
  REQUIRE(st.step == 17);
}

TEST_CASE("adam step counter advances per call") {
  Matrix p(1, 2, 1.0), g(1, 2, 0.5);
  AdamState st(1, 2);
  REQUIRE(st.step == 0);
  adam_step(p, g, st, 0.01);
  adam_step(p, g, st, 0.01);
  REQUIRE(st.step == 2);
}

TEST_CASE("adam rejects non-finite gradients") {
  Matrix p(1, 1, 1.0), g(1, 1);
  g(0, 0) = std::numeric_limits<double>::quiet_NaN();
  AdamState st(1, 1);
  try {
    adam_step(p, g, st, 0.1);
    FAIL("expected numeric error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Numeric);
  }
}

TEST_CASE("random unit columns have unit norm") {
  std::mt19937_64 rng(11);
  Matrix m = random_unit_columns(6, 9, rng);
  for (std::size_t j = 0; j < m.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.rows; ++i) s += m(i, j) * m(i, j);
    REQUIRE(std::sqrt(s) == Catch::Approx(1.0).margin(1e-12));
  }
}
