#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "boardsae/probes.hpp"

using namespace boardsae;
using namespace boardsae::probes;

TEST_CASE("separable 2-d data reaches F1 1") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 0.3);
  Matrix x(200, 2);
  BitVec y(200);
  for (std::size_t r = 0; r < 200; ++r) {
    bool pos = r % 2 == 0;
    x(r, 0) = (pos ? 2.0 : -2.0) + noise(rng);
    x(r, 1) = noise(rng);
    if (pos) y.set(r);
  }
  Probe p = train_probe(x, y);
  REQUIRE(probe_f1(p, x, y) == 1.0);
}

TEST_CASE("labels independent of inputs stay near the base rate") {
  // balanced random labels: F1 stays under 0.6 across seeds
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    Matrix x = random_gaussian(400, 6, rng);
    BitVec y(400);
    for (std::size_t r = 0; r < 400; ++r)
      if (rng() & 1) y.set(r);
    Matrix x_test = random_gaussian(400, 6, rng);
    BitVec y_test(400);
    for (std::size_t r = 0; r < 400; ++r)
      if (rng() & 1) y_test.set(r);
    ProbeConfig cfg;
    cfg.seed = seed;
    Probe p = train_probe(x, y, cfg);
    REQUIRE(probe_f1(p, x_test, y_test) < 0.6);
  }
}

TEST_CASE("probe recovers the sign of the discriminating coordinate") {
  std::mt19937_64 rng(7);
  Matrix x = random_gaussian(300, 4, rng);
  BitVec y(300);
  for (std::size_t r = 0; r < 300; ++r)
    if (x(r, 0) > 0.0) y.set(r);
  Probe p = train_probe(x, y);
  REQUIRE(p.w[0] > 0.0);
  REQUIRE(std::abs(p.w[0]) > std::abs(p.w[1]));
  REQUIRE(probe_f1(p, x, y) > 0.95);
}

TEST_CASE("single-class labels are rejected") {
  Matrix x(10, 2, 1.0);
  BitVec none(10), all(10);
  for (std::size_t r = 0; r < 10; ++r) all.set(r);
  for (const BitVec& y : {none, all}) {
    try {
      train_probe(x, y);
      FAIL("expected degenerate-data error");
    } catch (const Error& e) {
      REQUIRE(e.kind() == ErrorKind::Data);
    }
  }
}

TEST_CASE("training is deterministic per seed") {
  std::mt19937_64 rng(9);
  Matrix x = random_gaussian(100, 3, rng);
  BitVec y(100);
  for (std::size_t r = 0; r < 100; ++r)
    if (x(r, 1) + x(r, 2) > 0.2) y.set(r);
  ProbeConfig cfg;
  cfg.seed = 3;
  Probe a = train_probe(x, y, cfg);
  Probe b = train_probe(x, y, cfg);
  REQUIRE(a.w == b.w);
  REQUIRE(a.b == b.b);
}

TEST_CASE("probe_f1 agrees with metrics::f1 on identical predictions") {
  std::mt19937_64 rng(11);
  Matrix x = random_gaussian(50, 2, rng);
  BitVec y(50);
  for (std::size_t r = 0; r < 50; ++r)
    if (x(r, 0) > 0) y.set(r);
  Probe p = train_probe(x, y);
  BitVec preds = probe_predict(p, x);
  REQUIRE(probe_f1(p, x, y) == metrics::f1(preds, y));
}

TEST_CASE("always-negative probe scores zero") {
  Matrix x(20, 2, 1.0);
  BitVec y(20);
  y.set(3);
  Probe p;
  p.w = {0.0, 0.0};
  p.b = -5.0;
  REQUIRE(probe_f1(p, x, y) == 0.0);
}
