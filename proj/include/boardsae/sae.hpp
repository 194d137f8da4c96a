#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <string>
#include <vector>

#include "boardsae/errors.hpp"
#include "boardsae/io.hpp"
#include "boardsae/linalg.hpp"

// Sparse autoencoders: Standard and Gated architectures, their losses and
// analytic gradients, the p-annealing and coefficient-annealing schedules,
// and the Adam training loop with unit-norm decoder columns.

namespace boardsae::sae {

enum class Variant { Standard, Gated };

inline const char* variant_name(Variant v) {
  return v == Variant::Standard ? "standard" : "gated";
}

inline Variant parse_variant(const std::string& s) {
  if (s == "standard") return Variant::Standard;
  if (s == "gated") return Variant::Gated;
  fail(ErrorKind::Config, "unknown SAE variant: " + s);
}

struct SaeParams {
  Variant variant = Variant::Standard;
  std::size_t n = 0;  // input dimension
  std::size_t m = 0;  // dictionary size
  Matrix w_enc;               // m x n (standard)
  Matrix w_gate, w_mag;       // m x n (gated)
  Matrix w_dec;               // n x m, unit-norm columns
  Vec b_enc, b_gate, b_mag;   // m
  Vec b_dec;                  // n

  // Decoder columns are random unit vectors; encoder weights start as the
  // decoder transpose; biases start at zero.
  static SaeParams init(Variant variant, std::size_t n, std::size_t m, std::uint64_t seed) {
    SaeParams p;
    p.variant = variant;
    p.n = n;
    p.m = m;
    std::mt19937_64 rng(seed);
    p.w_dec = random_unit_columns(n, m, rng);
    Matrix enc = transpose(p.w_dec);
    p.b_dec.assign(n, 0.0);
    if (variant == Variant::Standard) {
      p.w_enc = enc;
      p.b_enc.assign(m, 0.0);
    } else {
      p.w_gate = enc;
      p.w_mag = enc;
      p.b_gate.assign(m, 0.0);
      p.b_mag.assign(m, 0.0);
    }
    return p;
  }
};

inline void renormalize_decoder_columns(SaeParams& p) {
  for (std::size_t j = 0; j < p.m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) s += p.w_dec(i, j) * p.w_dec(i, j);
    s = std::sqrt(s);
    if (s < 1e-12) continue;  // dead zero column, reported elsewhere
    for (std::size_t i = 0; i < p.n; ++i) p.w_dec(i, j) /= s;
  }
}

inline double max_decoder_norm_error(const SaeParams& p) {
  double worst = 0.0;
  for (std::size_t j = 0; j < p.m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) s += p.w_dec(i, j) * p.w_dec(i, j);
    worst = std::max(worst, std::abs(std::sqrt(s) - 1.0));
  }
  return worst;
}

namespace detail {

// rows of x minus b_dec
inline Matrix center(const Matrix& x, const Vec& b_dec) {
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) out(r, c) -= b_dec[c];
  return out;
}

inline Matrix affine(const Matrix& x, const Matrix& w_t, const Vec& b) {
  Matrix out = matmul(x, w_t);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += b[c];
  return out;
}

inline Vec column_sums(const Matrix& x) {
  Vec s(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r)
    for (std::size_t c = 0; c < x.cols; ++c) s[c] += x(r, c);
  return s;
}

}  // namespace detail

// Intermediate values of one encode pass, kept for gradient computation.
struct EncodeCache {
  Matrix features;   // B x m
  Matrix pre;        // standard: pre-ReLU encoder outputs
  Matrix gate_pre;   // gated: pi_gate
  Matrix mag_pre;    // gated: magnitude path before ReLU and gating
};

inline EncodeCache encode_cached(const SaeParams& p, const Matrix& x) {
  require(x.cols == p.n, ErrorKind::Dimension, "encode: input width mismatch");
  EncodeCache c;
  Matrix xc = detail::center(x, p.b_dec);
  if (p.variant == Variant::Standard) {
    c.pre = detail::affine(xc, transpose(p.w_enc), p.b_enc);
    c.features = c.pre;
    for (double& v : c.features.a) v = v > 0.0 ? v : 0.0;
  } else {
    c.gate_pre = detail::affine(xc, transpose(p.w_gate), p.b_gate);
    c.mag_pre = detail::affine(xc, transpose(p.w_mag), p.b_mag);
    c.features = Matrix(x.rows, p.m);
    for (std::size_t i = 0; i < c.features.a.size(); ++i) {
      double mag = c.mag_pre.a[i] > 0.0 ? c.mag_pre.a[i] : 0.0;
      c.features.a[i] = c.gate_pre.a[i] > 0.0 ? mag : 0.0;
    }
  }
  return c;
}

// f(x): standard ReLU(W_e (x - b_d) + b_e); gated 1[pi_gate > 0] * ReLU(mag).
inline Matrix encode(const SaeParams& p, const Matrix& x) {
  return encode_cached(p, x).features;
}

inline Vec encode(const SaeParams& p, const Vec& x) {
  Matrix one(1, x.size());
  one.a = x;
  Matrix f = encode(p, one);
  return f.a;
}

// x_hat = W_d f + b_d
inline Matrix decode(const SaeParams& p, const Matrix& f) {
  require(f.cols == p.m, ErrorKind::Dimension, "decode: feature width mismatch");
  Matrix out = matmul(f, transpose(p.w_dec));
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += p.b_dec[c];
  return out;
}

inline Vec decode(const SaeParams& p, const Vec& f) {
  Matrix one(1, f.size());
  one.a = f;
  Matrix x = decode(p, one);
  return x.a;
}

// Scaled L_p^p penalty: lambda * sum_i f_i^p, with 0^p defined as 0.
inline double sparsity_penalty(const Matrix& f, double p, double lambda) {
  require(p > 0.0 && p <= 1.0, ErrorKind::Numeric, "sparsity exponent must be in (0, 1]");
  require(lambda >= 0.0, ErrorKind::Numeric, "lambda must be non-negative");
  double s = 0.0;
  if (p == 1.0) {
    for (double v : f.a)
      if (v > 0.0) s += v;
  } else {
    for (double v : f.a)
      if (v > 0.0) s += std::pow(v, p);
  }
  return lambda * s;
}

inline double sparsity_penalty(const Vec& f, double p, double lambda) {
  Matrix one(1, f.size());
  one.a = f;
  return sparsity_penalty(one, p, lambda);
}

struct LossOptions {
  double lambda = 0.0;
  double p = 1.0;            // sparsity exponent (1 = plain L1)
  bool squared_recon = false;  // standard loss only; the printed form is unsquared
  double grad_eps = 1e-8;    // regularizer for the p < 1 sparsity gradient
};

struct LossTerms {
  double total = 0.0;
  double recon = 0.0;
  double sparsity = 0.0;
  double aux = 0.0;  // gated frozen-decoder term
};

namespace detail {

// d/df of the mean sparsity penalty; zero at f == 0 (ReLU subgradient
// convention), (f + eps)^(p-1) bounds the p < 1 singularity.
inline double sparsity_grad(double f, double p, double lambda_over_b, double eps) {
  if (f <= 0.0) return 0.0;
  if (p == 1.0) return lambda_over_b;
  return lambda_over_b * p * std::pow(f + eps, p - 1.0);
}

}  // namespace detail

// Gated loss with an explicit frozen decoder copy. The third term treats the
// frozen decoder (and its pre-bias) as constants; passing the current decoder
// reproduces the training loss value.
inline LossTerms loss_gated_frozen(const SaeParams& p, const Matrix& frozen_w_dec,
                                   const Vec& frozen_b_dec, const Matrix& x,
                                   const LossOptions& opt) {
  require(p.variant == Variant::Gated, ErrorKind::State, "loss_gated on a non-gated SAE");
  const double B = double(x.rows);
  EncodeCache c = encode_cached(p, x);
  Matrix xhat = decode(p, c.features);
  LossTerms t;
  for (std::size_t r = 0; r < x.rows; ++r) {
    double s = 0.0;
    for (std::size_t col = 0; col < x.cols; ++col) {
      double d = xhat(r, col) - x(r, col);
      s += d * d;
    }
    t.recon += s;
  }
  t.recon /= B;

  Matrix gate_relu = c.gate_pre;
  for (double& v : gate_relu.a) v = v > 0.0 ? v : 0.0;
  t.sparsity = sparsity_penalty(gate_relu, opt.p, opt.lambda) / B;

  // The frozen copy fixes b_dec in both of its roles inside this term, so the
  // term is a function of W_gate / b_gate only.
  Matrix gate_pre_frozen = detail::affine(detail::center(x, frozen_b_dec),
                                          transpose(p.w_gate), p.b_gate);
  Matrix u = gate_pre_frozen;
  for (double& v : u.a) v = v > 0.0 ? v : 0.0;
  Matrix xfr = matmul(u, transpose(frozen_w_dec));
  for (std::size_t r = 0; r < xfr.rows; ++r)
    for (std::size_t col = 0; col < xfr.cols; ++col) xfr(r, col) += frozen_b_dec[col];
  for (std::size_t r = 0; r < x.rows; ++r) {
    double s = 0.0;
    for (std::size_t col = 0; col < x.cols; ++col) {
      double d = xfr(r, col) - x(r, col);
      s += d * d;
    }
    t.aux += s;
  }
  t.aux /= B;

  t.total = t.recon + t.sparsity + t.aux;
  return t;
}

// Mean over the batch of ||x - x_hat||_2 (unsquared, as printed; squared mode
// behind the flag) plus the sparsity penalty on the feature activations.
inline LossTerms loss_standard(const SaeParams& p, const Matrix& x, const LossOptions& opt) {
  require(p.variant == Variant::Standard, ErrorKind::State,
          "loss_standard on a non-standard SAE");
  const double B = double(x.rows);
  EncodeCache c = encode_cached(p, x);
  Matrix xhat = decode(p, c.features);
  LossTerms t;
  for (std::size_t r = 0; r < x.rows; ++r) {
    double s = 0.0;
    for (std::size_t col = 0; col < x.cols; ++col) {
      double d = xhat(r, col) - x(r, col);
      s += d * d;
    }
    t.recon += opt.squared_recon ? s : std::sqrt(s);
  }
  t.recon /= B;
  t.sparsity = sparsity_penalty(c.features, opt.p, opt.lambda) / B;
  t.total = t.recon + t.sparsity;
  return t;
}

inline LossTerms loss_gated(const SaeParams& p, const Matrix& x, const LossOptions& opt) {
  return loss_gated_frozen(p, p.w_dec, p.b_dec, x, opt);
}

inline LossTerms sae_loss(const SaeParams& p, const Matrix& x, const LossOptions& opt) {
  return p.variant == Variant::Standard ? loss_standard(p, x, opt) : loss_gated(p, x, opt);
}

struct SaeGrads {
  Matrix w_enc, w_gate, w_mag, w_dec;
  Vec b_enc, b_gate, b_mag, b_dec;
};

// Analytic gradients of the selected loss. ReLU subgradient at 0 is 0; the
// gate indicator carries no gradient; the gated aux term contributes nothing
// to W_d / b_d (frozen copy).
inline std::pair<LossTerms, SaeGrads> loss_and_gradients(const SaeParams& p, const Matrix& x,
                                                         const LossOptions& opt) {
  require(x.cols == p.n, ErrorKind::Dimension, "gradients: input width mismatch");
  require(x.rows > 0, ErrorKind::Data, "gradients: empty batch");
  const double B = double(x.rows);
  const std::size_t n = p.n, m = p.m;

  SaeGrads g;
  g.w_dec = Matrix(n, m);
  g.b_dec.assign(n, 0.0);

  LossTerms terms;
  Matrix xc = detail::center(x, p.b_dec);
  EncodeCache c = encode_cached(p, x);
  Matrix xhat = decode(p, c.features);

  // dL/dxhat for the reconstruction term
  Matrix gxhat(x.rows, n);
  if (p.variant == Variant::Standard && !opt.squared_recon) {
    for (std::size_t r = 0; r < x.rows; ++r) {
      double s = 0.0;
      for (std::size_t col = 0; col < n; ++col) {
        double d = xhat(r, col) - x(r, col);
        s += d * d;
      }
      double norm = std::sqrt(s);
      terms.recon += norm;
      if (norm > 0.0)
        for (std::size_t col = 0; col < n; ++col)
          gxhat(r, col) = (xhat(r, col) - x(r, col)) / (norm * B);
    }
  } else {
    for (std::size_t r = 0; r < x.rows; ++r) {
      double s = 0.0;
      for (std::size_t col = 0; col < n; ++col) {
        double d = xhat(r, col) - x(r, col);
        s += d * d;
        gxhat(r, col) = 2.0 * d / B;
      }
      terms.recon += s;
    }
  }
  terms.recon /= B;

  // decoder gradients from the reconstruction term
  g.w_dec = matmul(transpose(gxhat), c.features);
  Vec gxhat_colsum = detail::column_sums(gxhat);
  for (std::size_t i = 0; i < n; ++i) g.b_dec[i] += gxhat_colsum[i];

  if (p.variant == Variant::Standard) {
    terms.sparsity = sparsity_penalty(c.features, opt.p, opt.lambda) / B;

    // dL/df = W_d^T gxhat + sparsity term
    Matrix df = matmul(gxhat, p.w_dec);  // (B x n)(n x m)
    for (std::size_t i = 0; i < df.a.size(); ++i)
      df.a[i] += detail::sparsity_grad(c.features.a[i], opt.p, opt.lambda / B, opt.grad_eps);
    // through ReLU
    for (std::size_t i = 0; i < df.a.size(); ++i)
      if (c.pre.a[i] <= 0.0) df.a[i] = 0.0;

    g.w_enc = matmul(transpose(df), xc);
    g.b_enc = detail::column_sums(df);
    // encoder path of b_dec: pre = W_e (x - b_d) + b_e
    Vec df_colsum = g.b_enc;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += p.w_enc(j, i) * df_colsum[j];
      g.b_dec[i] -= s;
    }
  } else {
    // gated: term 1 through the magnitude path
    Matrix dmag = matmul(gxhat, p.w_dec);
    for (std::size_t i = 0; i < dmag.a.size(); ++i) {
      bool open = c.gate_pre.a[i] > 0.0 && c.mag_pre.a[i] > 0.0;
      if (!open) dmag.a[i] = 0.0;
    }
    g.w_mag = matmul(transpose(dmag), xc);
    g.b_mag = detail::column_sums(dmag);

    // term 2: lambda * sum ReLU(pi_gate)^p
    Matrix gate_relu = c.gate_pre;
    for (double& v : gate_relu.a) v = v > 0.0 ? v : 0.0;
    terms.sparsity = sparsity_penalty(gate_relu, opt.p, opt.lambda) / B;
    Matrix dgate(x.rows, m);
    for (std::size_t i = 0; i < dgate.a.size(); ++i)
      dgate.a[i] =
          detail::sparsity_grad(gate_relu.a[i], opt.p, opt.lambda / B, opt.grad_eps);

    // term 3: ||x - W_d_frozen ReLU(pi_gate)||^2, frozen copy == current values
    Matrix xfr = matmul(gate_relu, transpose(p.w_dec));
    for (std::size_t r = 0; r < x.rows; ++r)
      for (std::size_t col = 0; col < n; ++col) xfr(r, col) += p.b_dec[col];
    Matrix g3(x.rows, n);
    for (std::size_t r = 0; r < x.rows; ++r) {
      double s = 0.0;
      for (std::size_t col = 0; col < n; ++col) {
        double d = xfr(r, col) - x(r, col);
        s += d * d;
        g3(r, col) = 2.0 * d / B;
      }
      terms.aux += s;
    }
    terms.aux /= B;
    Matrix du = matmul(g3, p.w_dec);  // through the frozen decoder into u
    for (std::size_t i = 0; i < du.a.size(); ++i)
      if (c.gate_pre.a[i] <= 0.0) du.a[i] = 0.0;
    add_inplace(dgate, du);

    g.w_gate = matmul(transpose(dgate), xc);
    g.b_gate = detail::column_sums(dgate);

    // live b_dec encoder paths: term 1 via W_mag, term 2 via W_gate
    // (term 3 holds b_dec frozen, so only the term-2 share of dgate applies)
    Vec dmag_colsum = detail::column_sums(dmag);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += p.w_mag(j, i) * dmag_colsum[j];
      g.b_dec[i] -= s;
    }
    Matrix dgate2(x.rows, m);
    for (std::size_t i = 0; i < dgate2.a.size(); ++i)
      dgate2.a[i] =
          detail::sparsity_grad(gate_relu.a[i], opt.p, opt.lambda / B, opt.grad_eps);
    Vec dgate2_colsum = detail::column_sums(dgate2);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += p.w_gate(j, i) * dgate2_colsum[j];
      g.b_dec[i] -= s;
    }
  }
  terms.total = terms.recon + terms.sparsity + terms.aux;

  bool finite = all_finite(g.w_dec) && all_finite(g.b_dec) && std::isfinite(terms.total);
  if (p.variant == Variant::Standard)
    finite = finite && all_finite(g.w_enc) && all_finite(g.b_enc);
  else
    finite = finite && all_finite(g.w_gate) && all_finite(g.b_gate) && all_finite(g.w_mag) &&
             all_finite(g.b_mag);
  require(finite, ErrorKind::Numeric, "non-finite loss or gradient");
  return {terms, g};
}

// ---------------------------------------------------------------------------
// Schedules.

// p = 1 before the annealing window, then linear down to p_end at the final
// step (step indices are 0-based; the final step is total_steps - 1).
inline double p_schedule(long step, long total_steps, long anneal_start, double p_end) {
  require(total_steps > 0, ErrorKind::Config, "total_steps must be positive");
  require(step >= 0 && step <= total_steps, ErrorKind::Config, "step out of range");
  require(p_end > 0.0 && p_end <= 1.0, ErrorKind::Config, "p_end must be in (0, 1]");
  if (anneal_start < 0 || step < anneal_start) return 1.0;
  long final_step = total_steps - 1;
  if (step >= final_step) return p_end;
  if (anneal_start >= final_step) return p_end;
  double frac = double(final_step - step) / double(final_step - anneal_start);
  return p_end + (1.0 - p_end) * frac;
}

// Bounded queue of recent feature-activation batches; only the positive
// values matter for the penalty, so that is what gets stored.
struct AnnealState {
  long step = 0;
  double p = 1.0;
  double lambda = 0.0;
  std::size_t max_batches = 10;
  std::deque<std::vector<double>> queue;

  void push_batch(const Matrix& features) {
    std::vector<double> positives;
    for (double v : features.a)
      if (v > 0.0) positives.push_back(v);
    queue.push_back(std::move(positives));
    while (queue.size() > max_batches) queue.pop_front();
  }
};

struct LambdaUpdate {
  double lambda = 0.0;
  bool dead_features = false;  // all queued activations were zero
};

// lambda_{s+1} = lambda_s * (sum_q sum_i f_i^{p_s}) / (sum_q sum_i f_i^{p_next});
// keeps the penalty locally constant on the queued batches.
inline LambdaUpdate lambda_update(const AnnealState& st, double p_next) {
  require(!st.queue.empty(), ErrorKind::State, "lambda_update with an empty queue");
  double num = 0.0, den = 0.0;
  for (const auto& batch : st.queue)
    for (double f : batch) {
      num += std::pow(f, st.p);
      den += std::pow(f, p_next);
    }
  if (den == 0.0) return {st.lambda, true};
  return {st.lambda * (num / den), false};
}

// ---------------------------------------------------------------------------
// Training.

struct TrainConfig {
  std::size_t sample_budget = 300'000'000;  // total activation vectors consumed
  std::size_t batch_size = 8192;
  double learning_rate = 3e-4;
  long warmup_steps = 1000;
  double lr_decay_to = 1.0;  // final LR fraction, reached linearly at the last step
  std::size_t expansion_factor = 8;  // m = factor * n
  double lambda_init = 0.2;
  long anneal_start = 10000;
  double p_end = 0.2;
  std::size_t queue_len = 10;
  long lambda_update_every = 1;
  std::uint64_t seed = 0;
  Variant variant = Variant::Standard;
  bool p_anneal = false;
  bool squared_recon = false;
  long log_every = 100;

  long total_steps() const {
    long s = long(sample_budget / batch_size);
    return s > 0 ? s : 1;
  }
};

struct TrainLogEntry {
  long step = 0;
  double p = 1.0, lambda = 0.0;
  double total = 0.0, recon = 0.0, sparsity = 0.0, aux = 0.0;
  double l0 = 0.0;
};

struct TrainResult {
  SaeParams params;
  std::vector<TrainLogEntry> log;
  bool diverged = false;
  long steps_run = 0;
  long last_good_step = -1;
  double final_p = 1.0;
  double final_lambda = 0.0;
  std::size_t dead_features = 0;  // never active across training
};

namespace detail {

// Removes the component of the decoder gradient parallel to each (unit)
// column before the optimizer step.
inline void project_out_parallel(const SaeParams& p, Matrix& g_dec) {
  for (std::size_t j = 0; j < p.m; ++j) {
    double d = 0.0;
    for (std::size_t i = 0; i < p.n; ++i) d += g_dec(i, j) * p.w_dec(i, j);
    for (std::size_t i = 0; i < p.n; ++i) g_dec(i, j) -= d * p.w_dec(i, j);
  }
}

struct BatchStream {
  const Matrix& data;
  std::size_t batch_size;
  std::mt19937_64 rng;
  std::vector<std::size_t> order;
  std::size_t cursor = 0;

  BatchStream(const Matrix& d, std::size_t bs, std::uint64_t seed)
      : data(d), batch_size(bs), rng(seed), order(d.rows) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    reshuffle();
  }
  void reshuffle() {
    std::shuffle(order.begin(), order.end(), rng);
    cursor = 0;
  }
  Matrix next() {
    Matrix b(batch_size, data.cols);
    for (std::size_t r = 0; r < batch_size; ++r) {
      if (cursor >= order.size()) reshuffle();
      std::size_t src = order[cursor++];
      for (std::size_t c = 0; c < data.cols; ++c) b(r, c) = data(src, c);
    }
    return b;
  }
};

}  // namespace detail

// Adam with linear LR warmup; decoder columns re-normalized to unit L2 after
// every step with the parallel gradient component removed before the step.
// Deterministic for a fixed seed, config and data.
inline TrainResult train(const TrainConfig& cfg, const Matrix& data) {
  require(data.rows > 0 && data.cols > 0, ErrorKind::Data, "train: empty data");
  require(data.rows >= cfg.batch_size || cfg.batch_size > 0, ErrorKind::Data, "bad batch");
  require(cfg.p_end > 0.0 && cfg.p_end <= 1.0, ErrorKind::Config, "p_end must be in (0, 1]");
  require(cfg.learning_rate > 0.0, ErrorKind::Config, "learning rate must be positive");
  const long total = cfg.total_steps();
  if (cfg.p_anneal)
    require(cfg.anneal_start < total, ErrorKind::Config,
            "anneal_start must come before the final step");

  const std::size_t n = data.cols;
  const std::size_t m = cfg.expansion_factor * n;

  TrainResult out;
  out.params = SaeParams::init(cfg.variant, n, m, cfg.seed);
  SaeParams& p = out.params;

  AdamState st_wdec(n, m), st_bdec(1, n);
  AdamState st_wenc(m, n), st_benc(1, m);
  AdamState st_wgate(m, n), st_bgate(1, m), st_wmag(m, n), st_bmag(1, m);

  AnnealState anneal;
  anneal.lambda = cfg.lambda_init;
  anneal.max_batches = cfg.queue_len;

  detail::BatchStream stream(data, cfg.batch_size, cfg.seed + 0x9e3779b97f4a7c15ull);
  std::vector<long> last_active(m, -1);

  SaeParams last_good = p;
  long last_good_step = -1;

  auto vec_as_matrix = [](Vec& v) {
    Matrix m1(1, v.size());
    m1.a = v;
    return m1;
  };

  for (long step = 0; step < total; ++step) {
    Matrix batch = stream.next();
    double p_s = cfg.p_anneal ? p_schedule(step, total, cfg.anneal_start, cfg.p_end) : 1.0;
    anneal.step = step;
    anneal.p = p_s;

    LossOptions opt;
    opt.lambda = anneal.lambda;
    opt.p = p_s;
    opt.squared_recon = cfg.squared_recon;

    LossTerms terms;
    SaeGrads grads;
    EncodeCache cache = encode_cached(p, batch);
    try {
      auto lg = loss_and_gradients(p, batch, opt);
      terms = lg.first;
      grads = lg.second;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Numeric) {
        out.diverged = true;
        out.params = last_good;
        out.steps_run = step;
        out.last_good_step = last_good_step;
        out.final_p = p_s;
        out.final_lambda = anneal.lambda;
        return out;
      }
      throw;
    }

    double l0_sum = 0.0;
    for (std::size_t r = 0; r < cache.features.rows; ++r)
      for (std::size_t c2 = 0; c2 < cache.features.cols; ++c2)
        if (cache.features(r, c2) > 0.0) {
          l0_sum += 1.0;
          last_active[c2] = step;
        }
    double mean_l0 = l0_sum / double(cache.features.rows);

    anneal.push_batch(cache.features);

    double lr = cfg.learning_rate;
    if (cfg.warmup_steps > 0)
      lr *= std::min(1.0, double(step + 1) / double(cfg.warmup_steps));
    if (cfg.lr_decay_to < 1.0 && total > 1)
      lr *= 1.0 + (cfg.lr_decay_to - 1.0) * double(step) / double(total - 1);

    detail::project_out_parallel(p, grads.w_dec);
    adam_step(p.w_dec, grads.w_dec, st_wdec, lr);
    {
      Matrix bdec = vec_as_matrix(p.b_dec), gbdec = vec_as_matrix(grads.b_dec);
      adam_step(bdec, gbdec, st_bdec, lr);
      p.b_dec = bdec.a;
    }
    if (cfg.variant == Variant::Standard) {
      adam_step(p.w_enc, grads.w_enc, st_wenc, lr);
      Matrix benc = vec_as_matrix(p.b_enc), gbenc = vec_as_matrix(grads.b_enc);
      adam_step(benc, gbenc, st_benc, lr);
      p.b_enc = benc.a;
    } else {
      adam_step(p.w_gate, grads.w_gate, st_wgate, lr);
      adam_step(p.w_mag, grads.w_mag, st_wmag, lr);
      Matrix bg = vec_as_matrix(p.b_gate), gbg = vec_as_matrix(grads.b_gate);
      adam_step(bg, gbg, st_bgate, lr);
      p.b_gate = bg.a;
      Matrix bm = vec_as_matrix(p.b_mag), gbm = vec_as_matrix(grads.b_mag);
      adam_step(bm, gbm, st_bmag, lr);
      p.b_mag = bm.a;
    }
    renormalize_decoder_columns(p);

    // coefficient annealing: keep the penalty locally constant across p updates
    if (cfg.p_anneal && step + 1 >= cfg.anneal_start &&
        (cfg.lambda_update_every <= 1 || (step + 1) % cfg.lambda_update_every == 0)) {
      double p_next = p_schedule(std::min(step + 1, total), total, cfg.anneal_start, cfg.p_end);
      anneal.lambda = lambda_update(anneal, p_next).lambda;
    }

    last_good = p;
    last_good_step = step;

    if (cfg.log_every > 0 && (step % cfg.log_every == 0 || step == total - 1)) {
      out.log.push_back({step, p_s, opt.lambda, terms.total, terms.recon, terms.sparsity,
                         terms.aux, mean_l0});
    }
    out.final_p = p_s;
    out.final_lambda = anneal.lambda;
  }

  out.steps_run = total;
  out.last_good_step = last_good_step;
  for (long la : last_active)
    if (la < 0) ++out.dead_features;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints (same tensor container as model weight files).

inline void save_checkpoint(const std::string& path, const SaeParams& p,
                            const std::map<std::string, std::string>& config_echo,
                            long step, double p_s, double lambda_s) {
  io::TensorFile tf;
  tf.meta["kind"] = "sae";
  tf.meta["variant"] = variant_name(p.variant);
  tf.meta["n"] = std::to_string(p.n);
  tf.meta["m"] = std::to_string(p.m);
  tf.meta["step"] = std::to_string(step);
  tf.meta["p"] = std::to_string(p_s);
  tf.meta["lambda"] = std::to_string(lambda_s);
  for (const auto& [k, v] : config_echo) tf.meta["cfg." + k] = v;
  tf.put("w_dec", p.w_dec);
  tf.put("b_dec", p.b_dec);
  if (p.variant == Variant::Standard) {
    tf.put("w_enc", p.w_enc);
    tf.put("b_enc", p.b_enc);
  } else {
    tf.put("w_gate", p.w_gate);
    tf.put("b_gate", p.b_gate);
    tf.put("w_mag", p.w_mag);
    tf.put("b_mag", p.b_mag);
  }
  io::write_tensor_file(path, tf);
}

struct Checkpoint {
  SaeParams params;
  std::map<std::string, std::string> meta;
};

inline Checkpoint load_checkpoint(const std::string& path) {
  io::TensorFile tf = io::read_tensor_file(path);
  require(tf.meta.count("kind") && tf.meta.at("kind") == "sae", ErrorKind::Format,
          "not an SAE checkpoint: " + path);
  Checkpoint c;
  c.meta = tf.meta;
  c.params.variant = parse_variant(tf.meta.at("variant"));
  c.params.w_dec = tf.matrix("w_dec");
  c.params.b_dec = tf.vec("b_dec");
  c.params.n = c.params.w_dec.rows;
  c.params.m = c.params.w_dec.cols;
  if (c.params.variant == Variant::Standard) {
    c.params.w_enc = tf.matrix("w_enc");
    c.params.b_enc = tf.vec("b_enc");
  } else {
    c.params.w_gate = tf.matrix("w_gate");
    c.params.b_gate = tf.vec("b_gate");
    c.params.w_mag = tf.matrix("w_mag");
    c.params.b_mag = tf.vec("b_mag");
  }
  return c;
}

}  // namespace boardsae::sae
