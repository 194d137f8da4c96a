#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "boardsae/bits.hpp"
#include "boardsae/errors.hpp"
#include "boardsae/linalg.hpp"

// Ground-truth superposition testbed: activations are sparse positive
// combinations of a known overcomplete dictionary, so dictionary recovery,
// coverage and reconstruction are all checkable against known answers.

namespace boardsae::synth {

struct Dictionary {
  std::size_t d = 16;        // ambient dimension
  std::size_t m_true = 64;   // number of planted unit features (m_true >= d allowed)
  std::size_t k = 3;         // active features per sample
  double mag_lo = 0.5, mag_hi = 1.5;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  Matrix cols;               // d x m_true, unit columns
};

inline Dictionary make_dictionary(std::size_t d, std::size_t m_true, std::size_t k,
                                  std::uint64_t seed, double noise_sigma = 0.0) {
  require(k <= m_true, ErrorKind::Config, "sparsity k exceeds dictionary size");
  Dictionary dict;
  dict.d = d;
  dict.m_true = m_true;
  dict.k = k;
  dict.seed = seed;
  dict.noise_sigma = noise_sigma;
  std::mt19937_64 rng(seed);
  dict.cols = random_unit_columns(d, m_true, rng);
  return dict;
}

// The paper-scale stand-in used by the recovery experiments.
inline Dictionary default_testbed(std::uint64_t seed = 7) {
  return make_dictionary(16, 64, 3, seed);
}

struct SynthData {
  Matrix x;          // count x d
  BitRows labels;    // count x m_true, which features were active
  // Active set per sample, for planted-loss references.
  std::vector<std::vector<std::pair<std::uint32_t, double>>> active;
};

// Each sample is a sum of k distinct uniformly-chosen dictionary columns with
// magnitudes ~ U[mag_lo, mag_hi], plus optional isotropic Gaussian noise.
inline SynthData sample_activations(const Dictionary& dict, std::size_t count,
                                    std::uint64_t seed) {
  SynthData out;
  out.x = Matrix(count, dict.d);
  out.labels = BitRows(count, dict.m_true);
  out.active.resize(count);
  std::mt19937_64 rng(seed);
  // separate stream so the planted structure is identical with and without noise
  std::mt19937_64 noise_rng(seed ^ 0x6a09e667f3bcc909ull);
  std::uniform_real_distribution<double> mag(dict.mag_lo, dict.mag_hi);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<std::uint32_t> pool(dict.m_true);
  for (std::size_t i = 0; i < dict.m_true; ++i) pool[i] = std::uint32_t(i);

  for (std::size_t s = 0; s < count; ++s) {
    // partial Fisher-Yates draw of k distinct features
    for (std::size_t j = 0; j < dict.k; ++j) {
      std::uniform_int_distribution<std::size_t> pick(j, dict.m_true - 1);
      std::swap(pool[j], pool[pick(rng)]);
      std::uint32_t feat = pool[j];
      double a = mag(rng);
      out.labels.set(s, feat);
      out.active[s].push_back({feat, a});
      for (std::size_t i = 0; i < dict.d; ++i)
        out.x(s, i) += a * dict.cols(i, feat);
    }
    if (dict.noise_sigma > 0.0)
      for (std::size_t i = 0; i < dict.d; ++i)
        out.x(s, i) += dict.noise_sigma * noise(noise_rng);
  }
  return out;
}

struct MatchResult {
  double mean_max_cosine = 0.0;
  double recovery_rate = 0.0;   // fraction of true features with cosine >= tau
  std::vector<double> per_true; // max cosine per true feature
};

// For each true feature, the best (signed) cosine against any learned column;
// assignment is an unconstrained max, not a bipartite matching.
inline MatchResult match_features(const Matrix& learned_cols, const Dictionary& dict,
                                  double tau = 0.9) {
  require(learned_cols.rows == dict.d, ErrorKind::Dimension,
          "match_features: dimension mismatch");
  MatchResult res;
  res.per_true.assign(dict.m_true, 0.0);
  std::vector<double> learned_norm(learned_cols.cols, 0.0);
  for (std::size_t j = 0; j < learned_cols.cols; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < dict.d; ++i) s += learned_cols(i, j) * learned_cols(i, j);
    learned_norm[j] = std::sqrt(s);
  }
  std::size_t recovered = 0;
  for (std::size_t f = 0; f < dict.m_true; ++f) {
    double best = -1.0;
    for (std::size_t j = 0; j < learned_cols.cols; ++j) {
      if (learned_norm[j] == 0.0) continue;
      double dotv = 0.0;
      for (std::size_t i = 0; i < dict.d; ++i) dotv += learned_cols(i, j) * dict.cols(i, f);
      best = std::max(best, dotv / learned_norm[j]);
    }
    res.per_true[f] = best;
    res.mean_max_cosine += best;
    if (best >= tau) ++recovered;
  }
  res.mean_max_cosine /= double(dict.m_true);
  res.recovery_rate = double(recovered) / double(dict.m_true);
  return res;
}

// Loss floor of the planted solution: with sigma = 0 the true dictionary plus
// the true coefficients reconstruct exactly, leaving only the sparsity term.
inline double planted_sparsity_loss(const SynthData& data, double p, double lambda) {
  double total = 0.0;
  for (const auto& sample : data.active)
    for (const auto& [feat, a] : sample) total += lambda * std::pow(a, p);
  return data.active.empty() ? 0.0 : total / double(data.active.size());
}

}  // namespace boardsae::synth
