#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "boardsae/bits.hpp"
#include "boardsae/errors.hpp"
#include "boardsae/linalg.hpp"

// Supervised SAE-quality metrics (coverage, board reconstruction over BSPs)
// and unsupervised ones (L0, loss recovered, relative reconstruction bias).

namespace boardsae::metrics {

// The t sweep used throughout: fractions of each feature's empirical maximum.
inline const std::vector<double>& default_thresholds() {
  static const std::vector<double> t = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
  return t;
}

inline double f1_from_counts(std::size_t tp, std::size_t pred_pos, std::size_t label_pos) {
  double precision = pred_pos ? double(tp) / double(pred_pos) : 0.0;
  double recall = label_pos ? double(tp) / double(label_pos) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

// Harmonic mean of precision and recall; 0 when precision + recall is 0.
inline double f1(const BitVec& preds, const BitVec& labels) {
  require(preds.size() == labels.size(), ErrorKind::Dimension, "f1: length mismatch");
  return f1_from_counts(and_count(preds, labels), preds.count(), labels.count());
}

// Empirical per-feature maxima over an estimation split.
inline std::vector<double> feature_max(const Matrix& feats) {
  std::vector<double> out(feats.cols, 0.0);
  for (std::size_t r = 0; r < feats.rows; ++r)
    for (std::size_t c = 0; c < feats.cols; ++c)
      if (feats(r, c) > out[c]) out[c] = feats(r, c);
  return out;
}

// phi_{i,t}(x) = 1[f_i(x) > t * f_i^max] over all samples.
inline BitVec binarize_feature(const Matrix& feats, std::size_t i, double t, double fmax) {
  BitVec mask(feats.rows);
  double cut = t * fmax;
  for (std::size_t r = 0; r < feats.rows; ++r)
    if (feats(r, i) > cut) mask.set(r);
  return mask;
}

enum class CoverageMode {
  PerBspMax,  // max over (feature, threshold) per BSP, as printed
  GlobalT,    // one t for the whole sweep, best mean taken over t
};

struct CoverageResult {
  double mean = 0.0;
  std::vector<double> per_bsp;     // best F1 per BSP; -1 for skipped BSPs
  std::vector<int> best_feature;   // arg max feature per BSP; -1 when none
  std::vector<double> best_t;
  std::size_t skipped_bsps = 0;    // no positive labels in the evaluation set
  std::size_t dead_features = 0;   // f_max == 0, excluded classifiers
  double global_t = -1.0;          // chosen t in GlobalT mode
};

// Mean over BSPs of the best F1 any single binarized feature achieves.
// fmax comes from the estimation split (may differ from the scored split).
inline CoverageResult coverage(const Matrix& feats, const BitRows& labels,
                               const std::vector<double>& fmax,
                               CoverageMode mode = CoverageMode::PerBspMax,
                               const std::vector<double>& thresholds = default_thresholds()) {
  require(feats.rows == labels.rows(), ErrorKind::Dimension,
          "coverage: sample count mismatch");
  require(fmax.size() == feats.cols, ErrorKind::Dimension, "coverage: fmax size mismatch");
  const std::size_t G = labels.bits(), m = feats.cols, T = thresholds.size();

  std::vector<BitVec> label_masks(G);
  std::vector<std::size_t> label_pos(G);
  for (std::size_t g = 0; g < G; ++g) {
    label_masks[g] = labels.column(g);
    label_pos[g] = label_masks[g].count();
  }

  CoverageResult res;
  res.per_bsp.assign(G, -1.0);
  res.best_feature.assign(G, -1);
  res.best_t.assign(G, -1.0);

  // best[t][g] tracks per-threshold bests so both modes come out of one scan
  std::vector<std::vector<double>> best_tg(T, std::vector<double>(G, 0.0));
  std::vector<std::vector<int>> best_tg_feat(T, std::vector<int>(G, -1));

  for (std::size_t i = 0; i < m; ++i) {
    if (fmax[i] <= 0.0) {
      ++res.dead_features;
      continue;
    }
    for (std::size_t ti = 0; ti < T; ++ti) {
      BitVec pred = binarize_feature(feats, i, thresholds[ti], fmax[i]);
      std::size_t pred_pos = pred.count();
      for (std::size_t g = 0; g < G; ++g) {
        if (label_pos[g] == 0) continue;
        double score = f1_from_counts(and_count(pred, label_masks[g]), pred_pos, label_pos[g]);
        if (score > best_tg[ti][g]) {
          best_tg[ti][g] = score;
          best_tg_feat[ti][g] = int(i);
        }
      }
    }
  }

  std::size_t alive = 0;
  for (std::size_t g = 0; g < G; ++g)
    if (label_pos[g] > 0) ++alive;
  res.skipped_bsps = G - alive;

  if (mode == CoverageMode::PerBspMax) {
    double sum = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      if (label_pos[g] == 0) continue;
      double best = 0.0;
      int feat = -1;
      double at_t = -1.0;
      for (std::size_t ti = 0; ti < T; ++ti)
        if (best_tg[ti][g] > best) {
          best = best_tg[ti][g];
          feat = best_tg_feat[ti][g];
          at_t = thresholds[ti];
        }
      res.per_bsp[g] = best;
      res.best_feature[g] = feat;
      res.best_t[g] = at_t;
      sum += best;
    }
    res.mean = alive ? sum / double(alive) : 0.0;
  } else {
    double best_mean = -1.0;
    std::size_t best_ti = 0;
    for (std::size_t ti = 0; ti < T; ++ti) {
      double sum = 0.0;
      for (std::size_t g = 0; g < G; ++g)
        if (label_pos[g] > 0) sum += best_tg[ti][g];
      double mean = alive ? sum / double(alive) : 0.0;
      if (mean > best_mean) {
        best_mean = mean;
        best_ti = ti;
      }
    }
    res.mean = best_mean < 0.0 ? 0.0 : best_mean;
    res.global_t = thresholds[best_ti];
    for (std::size_t g = 0; g < G; ++g) {
      if (label_pos[g] == 0) continue;
      res.per_bsp[g] = best_tg[best_ti][g];
      res.best_feature[g] = best_tg_feat[best_ti][g];
      res.best_t[g] = thresholds[best_ti];
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Board reconstruction.

struct HighPrecisionMap {
  double t = 0.0;
  double min_precision = 0.95;
  std::size_t min_support = 5;
  std::vector<std::vector<int>> features;  // per BSP: features high-precision for it
};

// For each feature firing at least min_support times on the training split,
// record every BSP for which it is a >= min_precision classifier.
inline HighPrecisionMap build_high_precision_map(const Matrix& train_feats,
                                                 const BitRows& train_labels,
                                                 const std::vector<double>& fmax, double t,
                                                 double min_precision = 0.95,
                                                 std::size_t min_support = 5) {
  require(train_feats.rows == train_labels.rows(), ErrorKind::Dimension,
          "high-precision map: sample count mismatch");
  const std::size_t G = train_labels.bits(), m = train_feats.cols;
  HighPrecisionMap map;
  map.t = t;
  map.min_precision = min_precision;
  map.min_support = min_support;
  map.features.assign(G, {});

  std::vector<BitVec> label_masks(G);
  for (std::size_t g = 0; g < G; ++g) label_masks[g] = train_labels.column(g);

  for (std::size_t i = 0; i < m; ++i) {
    if (fmax[i] <= 0.0) continue;
    BitVec pred = binarize_feature(train_feats, i, t, fmax[i]);
    std::size_t pred_pos = pred.count();
    if (pred_pos < min_support) continue;
    for (std::size_t g = 0; g < G; ++g) {
      std::size_t tp = and_count(pred, label_masks[g]);
      double precision = double(tp) / double(pred_pos);
      if (precision >= min_precision) map.features[g].push_back(int(i));
    }
  }
  return map;
}

// P_g = 1 iff any feature that is high precision for g fires on this sample.
inline BitVec reconstruct(const Vec& feature_row, const HighPrecisionMap& map,
                          const std::vector<double>& fmax) {
  BitVec out(map.features.size());
  for (std::size_t g = 0; g < map.features.size(); ++g) {
    for (int i : map.features[g]) {
      if (feature_row[std::size_t(i)] > map.t * fmax[std::size_t(i)]) {
        out.set(g);
        break;
      }
    }
  }
  return out;
}

struct ReconstructionOptions {
  std::vector<double> thresholds = default_thresholds();
  double min_precision = 0.95;
  std::size_t min_support = 5;
  // The printed form keeps max_t inside the test-set sum, which selects t on
  // test data; default picks one t on the training split instead.
  bool leak_faithful = false;
};

struct ReconstructionResult {
  double mean_f1 = 0.0;
  double t_selected = -1.0;       // chosen threshold (train-selected mode)
  std::size_t scored = 0;         // test positions with at least one true label
  std::size_t skipped = 0;        // all-masked positions (not scored)
};

namespace detail {

inline double mean_board_f1(const Matrix& feats, const BitRows& labels,
                            const HighPrecisionMap& map, const std::vector<double>& fmax,
                            std::size_t* scored_out, std::size_t* skipped_out) {
  double sum = 0.0;
  std::size_t scored = 0, skipped = 0;
  for (std::size_t r = 0; r < feats.rows; ++r) {
    std::size_t label_pos = labels.row_count_ones(r);
    if (label_pos == 0) {
      ++skipped;  // nothing measurable on this board (e.g. all pieces masked)
      continue;
    }
    Vec row(feats.cols);
    for (std::size_t c = 0; c < feats.cols; ++c) row[c] = feats(r, c);
    BitVec pred = reconstruct(row, map, fmax);
    sum += f1(pred, labels.row(r));
    ++scored;
  }
  if (scored_out) *scored_out = scored;
  if (skipped_out) *skipped_out = skipped;
  return scored ? sum / double(scored) : 0.0;
}

}  // namespace detail

// Mean per-position F1 between predicted and true labels on the test split.
// Maps are always built on the training split; the threshold is selected on
// the training split unless leak_faithful replicates the printed max_t-inside-
// the-sum form.
inline ReconstructionResult reconstruction_score(const Matrix& train_feats,
                                                 const BitRows& train_labels,
                                                 const Matrix& test_feats,
                                                 const BitRows& test_labels,
                                                 const std::vector<double>& fmax,
                                                 const ReconstructionOptions& opt = {}) {
  require(train_labels.bits() == test_labels.bits(), ErrorKind::Dimension,
          "reconstruction: catalog mismatch between splits");
  std::vector<HighPrecisionMap> maps;
  maps.reserve(opt.thresholds.size());
  for (double t : opt.thresholds)
    maps.push_back(build_high_precision_map(train_feats, train_labels, fmax, t,
                                            opt.min_precision, opt.min_support));

  ReconstructionResult res;
  if (!opt.leak_faithful) {
    double best_train = -1.0;
    std::size_t best = 0;
    for (std::size_t ti = 0; ti < maps.size(); ++ti) {
      double train_score =
          detail::mean_board_f1(train_feats, train_labels, maps[ti], fmax, nullptr, nullptr);
      if (train_score > best_train) {
        best_train = train_score;
        best = ti;
      }
    }
    res.t_selected = opt.thresholds[best];
    res.mean_f1 = detail::mean_board_f1(test_feats, test_labels, maps[best], fmax,
                                        &res.scored, &res.skipped);
  } else {
    double sum = 0.0;
    std::size_t scored = 0, skipped = 0;
    for (std::size_t r = 0; r < test_feats.rows; ++r) {
      std::size_t label_pos = test_labels.row_count_ones(r);
      if (label_pos == 0) {
        ++skipped;
        continue;
      }
      Vec row(test_feats.cols);
      for (std::size_t c = 0; c < test_feats.cols; ++c) row[c] = test_feats(r, c);
      BitVec truth = test_labels.row(r);
      double best = 0.0;
      for (const HighPrecisionMap& map : maps)
        best = std::max(best, f1(reconstruct(row, map, fmax), truth));
      sum += best;
      ++scored;
    }
    res.mean_f1 = scored ? sum / double(scored) : 0.0;
    res.scored = scored;
    res.skipped = skipped;
  }
  return res;
}

// ---------------------------------------------------------------------------
// Unsupervised metrics.

// Mean count of strictly positive feature activations per sample.
inline double l0(const Matrix& feats) {
  if (feats.rows == 0) return 0.0;
  double active = 0.0;
  for (double v : feats.a)
    if (v > 0.0) active += 1.0;
  return active / double(feats.rows);
}

struct LossRecovered {
  double value = 0.0;
  bool outside_unit_interval = false;
};

// (H_* - H_0) / (H_orig - H_0); unclamped, flagged when outside [0, 1].
inline LossRecovered loss_recovered(double h_orig, double h_star, double h_zero) {
  require(h_zero != h_orig, ErrorKind::Numeric,
          "loss recovered undefined: zero-ablation loss equals the original loss");
  LossRecovered out;
  out.value = (h_star - h_zero) / (h_orig - h_zero);
  out.outside_unit_interval = out.value < 0.0 || out.value > 1.0;
  return out;
}

struct GammaResult {
  double gamma = std::numeric_limits<double>::quiet_NaN();
  bool unstable = false;  // denominator near zero (L0-near-zero regime)
};

// gamma = E||x_hat||^2 / E<x_hat, x>, the minimizer of E||x_hat/g - x||^2.
// gamma < 1 indicates shrinkage; a perfectly unbiased SAE has gamma = 1.
inline GammaResult reconstruction_bias(const Matrix& x, const Matrix& xhat) {
  require(x.same_shape(xhat), ErrorKind::Dimension, "reconstruction_bias: shape mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i) {
    num += xhat.a[i] * xhat.a[i];
    den += xhat.a[i] * x.a[i];
  }
  GammaResult out;
  out.unstable = std::abs(den) <= 1e-12 * std::max(1.0, num);
  if (den != 0.0) out.gamma = num / den;
  return out;
}

// 1 - sum||x - x_hat||^2 / sum||x||^2. Doubles as the loss-recovered analog
// on model-free (synthetic) data, where zero-ablating means predicting 0.
inline double fraction_variance_explained(const Matrix& x, const Matrix& xhat) {
  require(x.same_shape(xhat), ErrorKind::Dimension, "fve: shape mismatch");
  double err = 0.0, total = 0.0;
  for (std::size_t i = 0; i < x.a.size(); ++i) {
    double d = x.a[i] - xhat.a[i];
    err += d * d;
    total += x.a[i] * x.a[i];
  }
  require(total > 0.0, ErrorKind::Data, "fve undefined on all-zero data");
  return 1.0 - err / total;
}

}  // namespace boardsae::metrics
