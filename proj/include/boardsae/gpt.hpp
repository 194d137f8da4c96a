#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "boardsae/common.hpp"
#include "boardsae/errors.hpp"
#include "boardsae/io.hpp"
#include "boardsae/linalg.hpp"
#include "boardsae/squares.hpp"

// Forward-only GPT inference (pre-layer-norm GPT-2-style blocks): character /
// square tokenization, residual-stream extraction after a chosen block's MLP,
// activation patching, and cross-entropy bookkeeping for loss recovered.

namespace boardsae::gpt {

struct Config {
  int n_layers = 8;
  int n_heads = 8;
  int d_model = 512;
  int max_seq = 1024;
};

struct LayerWeights {
  Vec ln1_g, ln1_b;
  Matrix wq, wk, wv, wo;  // each d_model x d_model, applied as x * W
  Vec bq, bk, bv, bo;
  Vec ln2_g, ln2_b;
  Matrix w_in;   // d_model x 4*d_model
  Vec b_in;
  Matrix w_out;  // 4*d_model x d_model
  Vec b_out;
};

struct Model {
  Config cfg;
  GameKind game = GameKind::Chess;
  std::vector<std::string> vocab;
  Matrix tok_emb;  // vocab x d_model
  Matrix pos_emb;  // max_seq x d_model
  std::vector<LayerWeights> layers;
  Vec lnf_g, lnf_b;
  Matrix unembed;  // d_model x vocab

  int vocab_size() const { return int(vocab.size()); }
};

// Default vocabularies for the two games. Chess models read PGN text one
// character at a time; Othello models read one square token per move.
inline std::vector<std::string> chess_vocab() {
  std::vector<std::string> v;
  for (char c : std::string(";0123456789. abcdefghxX=+#KQRBNO-")) v.emplace_back(1, c);
  return v;
}

inline std::vector<std::string> othello_vocab() {
  std::vector<std::string> v;
  for (int s = 0; s < 64; ++s) {
    // the four center squares are occupied from setup and never playable
    if (s == make_square(3, 3) || s == make_square(4, 4) || s == make_square(3, 4) ||
        s == make_square(4, 3))
      continue;
    v.push_back(square_name(s));
  }
  v.emplace_back("--");
  return v;
}

inline std::vector<int> tokenize(const std::vector<std::string>& vocab, GameKind game,
                                 std::string_view text) {
  std::map<std::string, int, std::less<>> index;
  for (std::size_t i = 0; i < vocab.size(); ++i) index[vocab[i]] = int(i);
  std::vector<int> out;
  if (game == GameKind::Chess) {
    for (std::size_t i = 0; i < text.size(); ++i) {
      auto it = index.find(std::string_view(&text[i], 1));
      if (it == index.end())
        fail(ErrorKind::Vocab,
             "character '" + std::string(1, text[i]) + "' not in vocabulary", long(i));
      out.push_back(it->second);
    }
  } else {
    std::size_t i = 0;
    while (i < text.size()) {
      while (i < text.size() && text[i] == ' ') ++i;
      if (i >= text.size()) break;
      std::size_t start = i;
      while (i < text.size() && text[i] != ' ') ++i;
      auto it = index.find(text.substr(start, i - start));
      if (it == index.end())
        fail(ErrorKind::Vocab,
             "token '" + std::string(text.substr(start, i - start)) + "' not in vocabulary",
             long(start));
      out.push_back(it->second);
    }
  }
  return out;
}

inline std::string detokenize(const std::vector<std::string>& vocab, GameKind game,
                              const std::vector<int>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    require(tokens[i] >= 0 && std::size_t(tokens[i]) < vocab.size(), ErrorKind::Vocab,
            "token id out of range");
    if (game != GameKind::Chess && i) out += ' ';
    out += vocab[std::size_t(tokens[i])];
  }
  return out;
}

inline std::vector<int> tokenize(const Model& m, std::string_view text) {
  return tokenize(m.vocab, m.game, text);
}

namespace detail {

// In-place layer norm of one row; gain/bias applied after normalization.
inline void layer_norm_row(double* x, int n, const Vec& g, const Vec& b) {
  double mean = 0.0;
  for (int i = 0; i < n; ++i) mean += x[i];
  mean /= n;
  double var = 0.0;
  for (int i = 0; i < n; ++i) var += (x[i] - mean) * (x[i] - mean);
  var /= n;
  double inv = 1.0 / std::sqrt(var + 1e-5);
  for (int i = 0; i < n; ++i) x[i] = (x[i] - mean) * inv * g[std::size_t(i)] + b[std::size_t(i)];
}

inline Matrix layer_norm(const Matrix& x, const Vec& g, const Vec& b) {
  Matrix out = x;
  for (std::size_t r = 0; r < x.rows; ++r)
    layer_norm_row(&out.a[r * x.cols], int(x.cols), g, b);
  return out;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

inline Matrix linear(const Matrix& x, const Matrix& w, const Vec& b) {
  Matrix out = matmul(x, w);
  for (std::size_t r = 0; r < out.rows; ++r)
    for (std::size_t c = 0; c < out.cols; ++c) out(r, c) += b[c];
  return out;
}

inline Matrix causal_attention(const Matrix& x_norm, const LayerWeights& lw, int n_heads) {
  const std::size_t T = x_norm.rows, n = x_norm.cols;
  const std::size_t dh = n / std::size_t(n_heads);
  Matrix q = linear(x_norm, lw.wq, lw.bq);
  Matrix k = linear(x_norm, lw.wk, lw.bk);
  Matrix v = linear(x_norm, lw.wv, lw.bv);
  Matrix ctx(T, n);
  const double scale = 1.0 / std::sqrt(double(dh));
  std::vector<double> scores;
  for (int h = 0; h < n_heads; ++h) {
    std::size_t off = std::size_t(h) * dh;
    for (std::size_t t = 0; t < T; ++t) {
      scores.assign(t + 1, 0.0);
      double maxv = -1e300;
      for (std::size_t s = 0; s <= t; ++s) {
        double dotv = 0.0;
        for (std::size_t d = 0; d < dh; ++d) dotv += q(t, off + d) * k(s, off + d);
        scores[s] = dotv * scale;
        if (scores[s] > maxv) maxv = scores[s];
      }
      double denom = 0.0;
      for (std::size_t s = 0; s <= t; ++s) {
        scores[s] = std::exp(scores[s] - maxv);
        denom += scores[s];
      }
      for (std::size_t s = 0; s <= t; ++s) {
        double wgt = scores[s] / denom;
        for (std::size_t d = 0; d < dh; ++d) ctx(t, off + d) += wgt * v(s, off + d);
      }
    }
  }
  return linear(ctx, lw.wo, lw.bo);
}

}  // namespace detail

struct Forward {
  Matrix logits;  // T x vocab
};

// Runs the causal forward pass. When patch_layer >= 0, the residual stream is
// overwritten at `positions` right after that block's MLP is added (the
// post-MLP residual site). When extract_to is non-null, the rows at those
// positions of the same site are copied out instead.
inline Forward forward_impl(const Model& m, const std::vector<int>& tokens, int patch_layer,
                            const std::vector<std::size_t>& positions,
                            const Matrix* replacement, Matrix* extract_to) {
  const std::size_t T = tokens.size();
  const std::size_t n = std::size_t(m.cfg.d_model);
  require(T > 0, ErrorKind::Index, "empty token sequence");
  require(int(T) <= m.cfg.max_seq, ErrorKind::Index,
          "sequence length " + std::to_string(T) + " exceeds context limit " +
              std::to_string(m.cfg.max_seq));
  for (int t : tokens)
    require(t >= 0 && t < m.vocab_size(), ErrorKind::Vocab, "token id out of range");
  if (patch_layer >= 0) {
    require(patch_layer < m.cfg.n_layers, ErrorKind::Index, "layer out of range");
    for (std::size_t p : positions)
      require(p < T, ErrorKind::Index, "position " + std::to_string(p) + " out of range");
    if (replacement) {
      require(replacement->rows == positions.size() && replacement->cols == n,
              ErrorKind::Dimension, "replacement shape must be |positions| x d_model");
    }
  }

  Matrix x(T, n);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t d = 0; d < n; ++d)
      x(t, d) = m.tok_emb(std::size_t(tokens[t]), d) + m.pos_emb(t, d);

  for (int layer = 0; layer < m.cfg.n_layers; ++layer) {
    const LayerWeights& lw = m.layers[std::size_t(layer)];
    Matrix attn = detail::causal_attention(detail::layer_norm(x, lw.ln1_g, lw.ln1_b), lw,
                                           m.cfg.n_heads);
    add_inplace(x, attn);
    Matrix h = detail::linear(detail::layer_norm(x, lw.ln2_g, lw.ln2_b), lw.w_in, lw.b_in);
    for (double& v : h.a) v = detail::gelu(v);
    Matrix mlp = detail::linear(h, lw.w_out, lw.b_out);
    add_inplace(x, mlp);

    if (layer == patch_layer) {
      if (extract_to) {
        *extract_to = Matrix(positions.size(), n);
        for (std::size_t i = 0; i < positions.size(); ++i)
          for (std::size_t d = 0; d < n; ++d) (*extract_to)(i, d) = x(positions[i], d);
        return Forward{};  // extraction does not need the remaining layers
      }
      if (replacement) {
        for (std::size_t i = 0; i < positions.size(); ++i)
          for (std::size_t d = 0; d < n; ++d) x(positions[i], d) = (*replacement)(i, d);
      }
    }
  }

  Matrix normed = detail::layer_norm(x, m.lnf_g, m.lnf_b);
  Forward out;
  out.logits = matmul(normed, m.unembed);
  return out;
}

inline Forward forward(const Model& m, const std::vector<int>& tokens) {
  return forward_impl(m, tokens, -1, {}, nullptr, nullptr);
}

// Residual stream rows after the given block's MLP is added, one row per
// requested position.
inline Matrix extract_activations(const Model& m, const std::vector<int>& tokens, int layer,
                                  const std::vector<std::size_t>& positions) {
  Matrix out(0, std::size_t(m.cfg.d_model));
  if (positions.empty()) return out;
  forward_impl(m, tokens, layer, positions, nullptr, &out);
  return out;
}

inline Forward patched_forward(const Model& m, const std::vector<int>& tokens, int layer,
                               const std::vector<std::size_t>& positions,
                               const Matrix& replacement) {
  return forward_impl(m, tokens, layer, positions, &replacement, nullptr);
}

// Cross entropy of predicting tokens[t+1] from position t.
inline double cross_entropy_at(const Forward& f, const std::vector<int>& tokens,
                               std::size_t t) {
  require(t + 1 < tokens.size(), ErrorKind::Index,
          "no next token at position " + std::to_string(t));
  const std::size_t V = f.logits.cols;
  double maxv = -1e300;
  for (std::size_t j = 0; j < V; ++j) maxv = std::max(maxv, f.logits(t, j));
  double denom = 0.0;
  for (std::size_t j = 0; j < V; ++j) denom += std::exp(f.logits(t, j) - maxv);
  double target = f.logits(t, std::size_t(tokens[t + 1]));
  return std::log(denom) - (target - maxv);
}

struct CeSums {
  double total = 0.0;
  std::size_t count = 0;
  double mean() const {
    require(count > 0, ErrorKind::Data, "no positions to average cross entropy over");
    return total / double(count);
  }
};

inline CeSums ce_at_positions(const Forward& f, const std::vector<int>& tokens,
                              const std::vector<std::size_t>& positions) {
  CeSums s;
  for (std::size_t p : positions) {
    if (p + 1 >= tokens.size()) continue;  // final token predicts nothing
    s.total += cross_entropy_at(f, tokens, p);
    s.count += 1;
  }
  return s;
}

inline CeSums ce_all_positions(const Forward& f, const std::vector<int>& tokens) {
  CeSums s;
  for (std::size_t t = 0; t + 1 < tokens.size(); ++t) {
    s.total += cross_entropy_at(f, tokens, t);
    s.count += 1;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Construction and the weight-file format.

inline Model random_model(const Config& cfg, GameKind game, std::vector<std::string> vocab,
                          std::uint64_t seed) {
  require(cfg.d_model % cfg.n_heads == 0, ErrorKind::Dimension,
          "d_model must be divisible by n_heads");
  std::mt19937_64 rng(seed);
  const std::size_t n = std::size_t(cfg.d_model);
  const double s0 = 0.08;
  Model m;
  m.cfg = cfg;
  m.game = game;
  m.vocab = std::move(vocab);
  m.tok_emb = random_gaussian(m.vocab.size(), n, rng, s0);
  m.pos_emb = random_gaussian(std::size_t(cfg.max_seq), n, rng, s0);
  for (int l = 0; l < cfg.n_layers; ++l) {
    LayerWeights lw;
    lw.ln1_g.assign(n, 1.0);
    lw.ln1_b.assign(n, 0.0);
    lw.ln2_g.assign(n, 1.0);
    lw.ln2_b.assign(n, 0.0);
    lw.wq = random_gaussian(n, n, rng, s0);
    lw.wk = random_gaussian(n, n, rng, s0);
    lw.wv = random_gaussian(n, n, rng, s0);
    lw.wo = random_gaussian(n, n, rng, s0);
    lw.bq.assign(n, 0.0);
    lw.bk.assign(n, 0.0);
    lw.bv.assign(n, 0.0);
    lw.bo.assign(n, 0.0);
    lw.w_in = random_gaussian(n, 4 * n, rng, s0);
    lw.b_in.assign(4 * n, 0.0);
    lw.w_out = random_gaussian(4 * n, n, rng, s0);
    lw.b_out.assign(n, 0.0);
    m.layers.push_back(std::move(lw));
  }
  m.lnf_g.assign(n, 1.0);
  m.lnf_b.assign(n, 0.0);
  m.unembed = random_gaussian(n, m.vocab.size(), rng, s0);
  return m;
}

inline void save_model(const std::string& path, const Model& m) {
  io::TensorFile tf;
  tf.meta["kind"] = "gpt";
  tf.meta["game"] = game_kind_name(m.game);
  tf.meta["n_layers"] = std::to_string(m.cfg.n_layers);
  tf.meta["n_heads"] = std::to_string(m.cfg.n_heads);
  tf.meta["d_model"] = std::to_string(m.cfg.d_model);
  tf.meta["max_seq"] = std::to_string(m.cfg.max_seq);
  tf.vocab = m.vocab;
  tf.put("tok_emb", m.tok_emb);
  tf.put("pos_emb", m.pos_emb);
  for (int l = 0; l < m.cfg.n_layers; ++l) {
    const LayerWeights& lw = m.layers[std::size_t(l)];
    std::string p = "layers." + std::to_string(l) + ".";
    tf.put(p + "ln1.g", lw.ln1_g);
    tf.put(p + "ln1.b", lw.ln1_b);
    tf.put(p + "attn.wq", lw.wq);
    tf.put(p + "attn.wk", lw.wk);
    tf.put(p + "attn.wv", lw.wv);
    tf.put(p + "attn.wo", lw.wo);
    tf.put(p + "attn.bq", lw.bq);
    tf.put(p + "attn.bk", lw.bk);
    tf.put(p + "attn.bv", lw.bv);
    tf.put(p + "attn.bo", lw.bo);
    tf.put(p + "ln2.g", lw.ln2_g);
    tf.put(p + "ln2.b", lw.ln2_b);
    tf.put(p + "mlp.w_in", lw.w_in);
    tf.put(p + "mlp.b_in", lw.b_in);
    tf.put(p + "mlp.w_out", lw.w_out);
    tf.put(p + "mlp.b_out", lw.b_out);
  }
  tf.put("lnf.g", m.lnf_g);
  tf.put("lnf.b", m.lnf_b);
  tf.put("unembed", m.unembed);
  io::write_tensor_file(path, tf);
}

inline Model load_model(const std::string& path) {
  io::TensorFile tf = io::read_tensor_file(path);
  require(tf.meta.count("kind") && tf.meta.at("kind") == "gpt", ErrorKind::Format,
          "not a model weight file: " + path);
  Model m;
  m.cfg.n_layers = std::stoi(tf.meta.at("n_layers"));
  m.cfg.n_heads = std::stoi(tf.meta.at("n_heads"));
  m.cfg.d_model = std::stoi(tf.meta.at("d_model"));
  m.cfg.max_seq = std::stoi(tf.meta.at("max_seq"));
  m.game = parse_game_kind(tf.meta.at("game"));
  m.vocab = tf.vocab;
  require(!m.vocab.empty(), ErrorKind::Format, "model has empty vocabulary");
  m.tok_emb = tf.matrix("tok_emb");
  m.pos_emb = tf.matrix("pos_emb");
  for (int l = 0; l < m.cfg.n_layers; ++l) {
    std::string p = "layers." + std::to_string(l) + ".";
    LayerWeights lw;
    lw.ln1_g = tf.vec(p + "ln1.g");
    lw.ln1_b = tf.vec(p + "ln1.b");
    lw.wq = tf.matrix(p + "attn.wq");
    lw.wk = tf.matrix(p + "attn.wk");
    lw.wv = tf.matrix(p + "attn.wv");
    lw.wo = tf.matrix(p + "attn.wo");
    lw.bq = tf.vec(p + "attn.bq");
    lw.bk = tf.vec(p + "attn.bk");
    lw.bv = tf.vec(p + "attn.bv");
    lw.bo = tf.vec(p + "attn.bo");
    lw.ln2_g = tf.vec(p + "ln2.g");
    lw.ln2_b = tf.vec(p + "ln2.b");
    lw.w_in = tf.matrix(p + "mlp.w_in");
    lw.b_in = tf.vec(p + "mlp.b_in");
    lw.w_out = tf.matrix(p + "mlp.w_out");
    lw.b_out = tf.vec(p + "mlp.b_out");
    m.layers.push_back(std::move(lw));
  }
  m.lnf_g = tf.vec("lnf.g");
  m.lnf_b = tf.vec("lnf.b");
  m.unembed = tf.matrix("unembed");
  const std::size_t n = std::size_t(m.cfg.d_model);
  require(m.cfg.d_model % m.cfg.n_heads == 0, ErrorKind::Format,
          "d_model not divisible by n_heads");
  require(m.tok_emb.rows == m.vocab.size() && m.tok_emb.cols == n, ErrorKind::Format,
          "tok_emb shape mismatch");
  require(m.unembed.rows == n && m.unembed.cols == m.vocab.size(), ErrorKind::Format,
          "unembed shape mismatch");
  return m;
}

}  // namespace boardsae::gpt
