#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "boardsae/bits.hpp"
#include "boardsae/errors.hpp"
#include "boardsae/linalg.hpp"
#include "boardsae/metrics.hpp"

// Logistic-regression linear probes, one per BSP; the supervised upper-bound
// baseline against which SAE features are compared.

namespace boardsae::probes {

struct Probe {
  Vec w;
  double b = 0.0;
  int bsp = -1;
};

struct ProbeConfig {
  double learning_rate = 0.05;
  long iterations = 600;
  double l2 = 1e-4;               // weight decay on w (not the bias)
  bool class_weighted = false;    // inverse-frequency weighting, off by default
  std::uint64_t seed = 0;
};

namespace detail {
inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }
// log(1 + e^z) without overflow
inline double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
}  // namespace detail

// Full-batch Adam on the logistic loss with L2 regularization; deterministic
// for a fixed seed.
inline Probe train_probe(const Matrix& x, const BitVec& y, const ProbeConfig& cfg = {}) {
  require(x.rows == y.size(), ErrorKind::Dimension, "train_probe: sample count mismatch");
  const std::size_t S = x.rows, n = x.cols;
  std::size_t pos = y.count();
  require(pos > 0 && pos < S, ErrorKind::Data,
          "train_probe: labels contain a single class");

  double w_pos = 1.0, w_neg = 1.0;
  if (cfg.class_weighted) {
    w_pos = double(S) / (2.0 * double(pos));
    w_neg = double(S) / (2.0 * double(S - pos));
  }

  std::mt19937_64 rng(cfg.seed);
  Probe probe;
  probe.w.assign(n, 0.0);
  std::normal_distribution<double> init(0.0, 0.01);
  for (double& v : probe.w) v = init(rng);

  Matrix w_state(1, n);
  w_state.a = probe.w;
  Matrix b_state(1, 1);
  b_state(0, 0) = 0.0;
  AdamState st_w(1, n), st_b(1, 1);

  for (long it = 0; it < cfg.iterations; ++it) {
    Matrix gw(1, n);
    double gb = 0.0;
    for (std::size_t r = 0; r < S; ++r) {
      double z = b_state(0, 0);
      for (std::size_t c = 0; c < n; ++c) z += w_state(0, c) * x(r, c);
      double target = y.get(r) ? 1.0 : 0.0;
      double weight = y.get(r) ? w_pos : w_neg;
      double delta = weight * (detail::sigmoid(z) - target) / double(S);
      for (std::size_t c = 0; c < n; ++c) gw(0, c) += delta * x(r, c);
      gb += delta;
    }
    for (std::size_t c = 0; c < n; ++c) gw(0, c) += cfg.l2 * w_state(0, c);
    Matrix gb_m(1, 1);
    gb_m(0, 0) = gb;
    adam_step(w_state, gw, st_w, cfg.learning_rate);
    adam_step(b_state, gb_m, st_b, cfg.learning_rate);
  }

  probe.w = w_state.a;
  probe.b = b_state(0, 0);
  require(all_finite(probe.w) && std::isfinite(probe.b), ErrorKind::Numeric,
          "probe training diverged");
  return probe;
}

inline BitVec probe_predict(const Probe& p, const Matrix& x) {
  require(x.cols == p.w.size(), ErrorKind::Dimension, "probe_predict: width mismatch");
  BitVec out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    double z = p.b;
    for (std::size_t c = 0; c < x.cols; ++c) z += p.w[c] * x(r, c);
    if (z > 0.0) out.set(r);  // P(y=1) > 0.5
  }
  return out;
}

// F1 at the 0.5 probability threshold; same F1 definition as metrics::f1.
inline double probe_f1(const Probe& p, const Matrix& x, const BitVec& y) {
  return metrics::f1(probe_predict(p, x), y);
}

}  // namespace boardsae::probes
