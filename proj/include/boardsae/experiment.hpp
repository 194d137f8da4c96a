#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "boardsae/bsp.hpp"
#include "boardsae/chess.hpp"
#include "boardsae/gpt.hpp"
#include "boardsae/io.hpp"
#include "boardsae/metrics.hpp"
#include "boardsae/othello.hpp"
#include "boardsae/probes.hpp"
#include "boardsae/sae.hpp"

// Experiment plumbing shared by the CLI and the integration tests: the
// key=value configuration surface, corpus labeling / activation extraction,
// and the end-to-end SAE evaluation pipeline.

namespace boardsae::experiment {

// ---------------------------------------------------------------------------
// Configuration. Every field has a Table-2-style default and is echoed back
// into reports for provenance; unknown keys are rejected.

struct Config {
  GameKind game = GameKind::Chess;
  int layer = 6;
  sae::Variant variant = sae::Variant::Standard;
  bool p_anneal = false;
  bool squared_recon = false;
  std::size_t sample_budget = 300'000'000;
  std::size_t batch_size = 8192;
  double learning_rate = 3e-4;
  long warmup_steps = 1000;
  double lr_decay_to = 1.0;
  std::size_t expansion_factor = 8;
  double lambda_init = 0.2;
  long anneal_start = 10000;
  double p_end = 0.2;
  std::size_t queue_len = 10;
  long lambda_update_every = 1;
  std::uint64_t seed = 0;
  std::uint64_t split_seed = 0;
  std::size_t train_games = 1000;
  std::size_t test_games = 1000;
  std::size_t min_support = 5;
  double min_precision = 0.95;
  bool coverage_global_t = false;
  bool recon_leak_mode = false;
  bool loss_all_positions = false;
  long log_every = 100;

  sae::TrainConfig train_config(std::size_t) const {
    sae::TrainConfig t;
    t.sample_budget = sample_budget;
    t.batch_size = batch_size;
    t.learning_rate = learning_rate;
    t.warmup_steps = warmup_steps;
    t.lr_decay_to = lr_decay_to;
    t.expansion_factor = expansion_factor;
    t.lambda_init = lambda_init;
    t.anneal_start = anneal_start;
    t.p_end = p_end;
    t.queue_len = queue_len;
    t.lambda_update_every = lambda_update_every;
    t.seed = seed;
    t.variant = variant;
    t.p_anneal = p_anneal;
    t.squared_recon = squared_recon;
    t.log_every = log_every;
    return t;
  }
};

namespace detail {

inline bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorKind::Config, "bad boolean for " + key + ": " + v);
}

inline double parse_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    require(used == v.size(), ErrorKind::Config, "bad number for " + key + ": " + v);
    return d;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "bad number for " + key + ": " + v);
  }
}

inline long long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    long long i = std::stoll(v, &used);
    require(used == v.size(), ErrorKind::Config, "bad integer for " + key + ": " + v);
    return i;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrorKind::Config, "bad integer for " + key + ": " + v);
  }
}

}  // namespace detail

inline void apply_config_entry(Config& c, const std::string& key, const std::string& value) {
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_int;
  if (key == "game")
    c.game = parse_game_kind(value);
  else if (key == "layer")
    c.layer = int(parse_int(value, key));
  else if (key == "variant")
    c.variant = sae::parse_variant(value);
  else if (key == "p_anneal")
    c.p_anneal = parse_bool(value, key);
  else if (key == "squared_recon")
    c.squared_recon = parse_bool(value, key);
  else if (key == "sample_budget")
    c.sample_budget = std::size_t(parse_int(value, key));
  else if (key == "batch_size")
    c.batch_size = std::size_t(parse_int(value, key));
  else if (key == "learning_rate")
    c.learning_rate = parse_double(value, key);
  else if (key == "warmup_steps")
    c.warmup_steps = long(parse_int(value, key));
  else if (key == "lr_decay_to")
    c.lr_decay_to = parse_double(value, key);
  else if (key == "expansion_factor")
    c.expansion_factor = std::size_t(parse_int(value, key));
  else if (key == "lambda_init")
    c.lambda_init = parse_double(value, key);
  else if (key == "anneal_start")
    c.anneal_start = long(parse_int(value, key));
  else if (key == "p_end")
    c.p_end = parse_double(value, key);
  else if (key == "queue_len")
    c.queue_len = std::size_t(parse_int(value, key));
  else if (key == "lambda_update_every")
    c.lambda_update_every = long(parse_int(value, key));
  else if (key == "seed")
    c.seed = std::uint64_t(parse_int(value, key));
  else if (key == "split_seed")
    c.split_seed = std::uint64_t(parse_int(value, key));
  else if (key == "train_games")
    c.train_games = std::size_t(parse_int(value, key));
  else if (key == "test_games")
    c.test_games = std::size_t(parse_int(value, key));
  else if (key == "min_support")
    c.min_support = std::size_t(parse_int(value, key));
  else if (key == "min_precision")
    c.min_precision = parse_double(value, key);
  else if (key == "coverage_mode") {
    if (value == "per_bsp")
      c.coverage_global_t = false;
    else if (value == "global_t")
      c.coverage_global_t = true;
    else
      fail(ErrorKind::Config, "coverage_mode must be per_bsp or global_t");
  } else if (key == "recon_leak_mode")
    c.recon_leak_mode = parse_bool(value, key);
  else if (key == "loss_positions") {
    if (value == "sampled")
      c.loss_all_positions = false;
    else if (value == "all")
      c.loss_all_positions = true;
    else
      fail(ErrorKind::Config, "loss_positions must be sampled or all");
  } else if (key == "log_every")
    c.log_every = long(parse_int(value, key));
  else
    fail(ErrorKind::Config, "unknown configuration key: " + key);
}

// key=value lines; '#' starts a comment; blank lines ignored.
inline Config parse_config_text(const std::vector<std::string>& lines) {
  Config c;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    auto trim = [](std::string s) {
      std::size_t b = s.find_first_not_of(" \t\r");
      std::size_t e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::Config,
            "line " + std::to_string(i + 1) + ": expected key=value, got '" + line + "'");
    apply_config_entry(c, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return c;
}

inline Config load_config(const std::string& path) {
  return parse_config_text(io::read_lines(path));
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Full echo, defaults included, for provenance blocks.
inline std::map<std::string, std::string> config_echo(const Config& c) {
  std::map<std::string, std::string> m;
  m["game"] = game_kind_name(c.game);
  m["layer"] = std::to_string(c.layer);
  m["variant"] = sae::variant_name(c.variant);
  m["p_anneal"] = c.p_anneal ? "true" : "false";
  m["squared_recon"] = c.squared_recon ? "true" : "false";
  m["sample_budget"] = std::to_string(c.sample_budget);
  m["batch_size"] = std::to_string(c.batch_size);
  m["learning_rate"] = format_double(c.learning_rate);
  m["warmup_steps"] = std::to_string(c.warmup_steps);
  m["lr_decay_to"] = format_double(c.lr_decay_to);
  m["expansion_factor"] = std::to_string(c.expansion_factor);
  m["lambda_init"] = format_double(c.lambda_init);
  m["anneal_start"] = std::to_string(c.anneal_start);
  m["p_end"] = format_double(c.p_end);
  m["queue_len"] = std::to_string(c.queue_len);
  m["lambda_update_every"] = std::to_string(c.lambda_update_every);
  m["seed"] = std::to_string(c.seed);
  m["split_seed"] = std::to_string(c.split_seed);
  m["train_games"] = std::to_string(c.train_games);
  m["test_games"] = std::to_string(c.test_games);
  m["min_support"] = std::to_string(c.min_support);
  m["min_precision"] = format_double(c.min_precision);
  m["coverage_mode"] = c.coverage_global_t ? "global_t" : "per_bsp";
  m["recon_leak_mode"] = c.recon_leak_mode ? "true" : "false";
  m["loss_positions"] = c.loss_all_positions ? "all" : "sampled";
  m["log_every"] = std::to_string(c.log_every);
  return m;
}

// ---------------------------------------------------------------------------
// Corpus labeling and extraction.

inline bsp::Catalog catalog_for(GameKind game, bsp::ChessBlock chess_block,
                                std::size_t synth_features = 0) {
  switch (game) {
    case GameKind::Chess: return bsp::chess_catalog(chess_block);
    case GameKind::Othello: return bsp::othello_catalog();
    case GameKind::Synthetic: return bsp::synthetic_catalog(synth_features);
  }
  fail(ErrorKind::Config, "bad game kind");
}

// Token positions where board state is measured: chess measures at every '.'
// in the PGN text, Othello after every move token.
inline std::vector<std::size_t> chess_sample_positions(const chess::PgnGame& g) {
  return g.period_offsets;
}

struct LabeledCorpus {
  io::LabelData labels;
  std::vector<io::ActivationDataset::Prov> prov;  // (game id, token position) per row
};

// Labels every sampled position of every game, in corpus order.
inline LabeledCorpus label_corpus(GameKind game, const std::vector<std::string>& lines,
                                  bsp::ChessBlock chess_block) {
  require(game != GameKind::Synthetic, ErrorKind::Config,
          "synthetic data is labeled at generation time");
  bsp::Catalog cat = catalog_for(game, chess_block);
  std::vector<BitVec> rows;
  LabeledCorpus out;
  for (std::size_t id = 0; id < lines.size(); ++id) {
    if (game == GameKind::Chess) {
      chess::PgnGame g = chess::parse_pgn(lines[id]);
      for (const auto& [offset, board] : chess::boards_at_periods(g)) {
        rows.push_back(bsp::chess_labels(board, chess_block));
        out.prov.push_back({std::uint32_t(id), std::uint32_t(offset)});
      }
    } else {
      othello::Transcript t = othello::parse_transcript(lines[id]);
      std::vector<othello::Board> states = othello::replay_states(t);
      for (std::size_t pos = 0; pos < states.size(); ++pos) {
        rows.push_back(bsp::othello_board_labels(states[pos]));
        out.prov.push_back({std::uint32_t(id), std::uint32_t(pos)});
      }
    }
  }
  out.labels.game = game;
  out.labels.catalog_hash = cat.hash();
  out.labels.rows = BitRows(rows.size(), cat.size());
  for (std::size_t r = 0; r < rows.size(); ++r) out.labels.rows.set_row(r, rows[r]);
  return out;
}

// Residual-stream activations for the same sampled positions, in the same
// order as label_corpus.
inline io::ActivationDataset extract_corpus(const gpt::Model& model,
                                            const std::vector<std::string>& lines, int layer,
                                            std::uint64_t model_hash) {
  io::ActivationDataset ds;
  ds.game = model.game;
  ds.layer = layer;
  ds.dim = std::uint32_t(model.cfg.d_model);
  ds.model_hash = model_hash;
  for (std::size_t id = 0; id < lines.size(); ++id) {
    std::vector<int> tokens = gpt::tokenize(model, lines[id]);
    std::vector<std::size_t> positions;
    if (model.game == GameKind::Chess) {
      chess::PgnGame g = chess::parse_pgn(lines[id]);
      positions = chess_sample_positions(g);
    } else {
      positions.resize(tokens.size());
      for (std::size_t i = 0; i < tokens.size(); ++i) positions[i] = i;
    }
    if (positions.empty()) continue;
    Matrix acts = gpt::extract_activations(model, tokens, layer, positions);
    for (std::size_t r = 0; r < acts.rows; ++r) {
      Vec row(acts.cols);
      for (std::size_t c = 0; c < acts.cols; ++c) row[c] = acts(r, c);
      ds.append_row(row, std::uint32_t(id), std::uint32_t(positions[r]));
    }
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Train/test partitioning of dataset rows by game id.

struct RowSplit {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
};

// Refuses overlapping manifests; rows whose game id is in neither split are
// dropped.
inline RowSplit partition_rows(const io::ActivationDataset& ds, const io::SplitManifest& m) {
  require(m.disjoint(), ErrorKind::Data, "train/test game ids overlap");
  std::set<std::uint32_t> train(m.train_ids.begin(), m.train_ids.end());
  std::set<std::uint32_t> test(m.test_ids.begin(), m.test_ids.end());
  RowSplit out;
  for (std::size_t r = 0; r < ds.prov.size(); ++r) {
    if (train.count(ds.prov[r].game_id))
      out.train_rows.push_back(r);
    else if (test.count(ds.prov[r].game_id))
      out.test_rows.push_back(r);
  }
  require(!out.train_rows.empty(), ErrorKind::Data, "no rows fall in the training split");
  require(!out.test_rows.empty(), ErrorKind::Data, "no rows fall in the test split");
  return out;
}

inline Matrix gather_rows(const Matrix& all, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), all.cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < all.cols; ++c) out(i, c) = all(rows[i], c);
  return out;
}

inline BitRows gather_rows(const BitRows& all, const std::vector<std::size_t>& rows) {
  BitRows out(rows.size(), all.bits());
  for (std::size_t i = 0; i < rows.size(); ++i) out.set_row(i, all.row(rows[i]));
  return out;
}

// ---------------------------------------------------------------------------
// End-to-end evaluation.

struct LossRecoveredDetail {
  double value = 0.0;
  bool outside_unit_interval = false;
  double h_orig = 0.0, h_star = 0.0, h_zero = 0.0;
  std::size_t positions = 0;
};

struct EvalReport {
  std::size_t n = 0, m = 0;
  std::string variant;
  double l0 = 0.0;
  double fve = 0.0;
  metrics::GammaResult gamma;
  metrics::CoverageResult coverage;
  metrics::ReconstructionResult reconstruction;
  std::optional<LossRecoveredDetail> loss_recovered;
  std::size_t train_rows = 0, test_rows = 0;
};

// Core metric pipeline: encode, estimate f_max on the training split, then
// coverage / reconstruction / L0 / gamma / FVE on the test split.
inline EvalReport evaluate_sae(const sae::SaeParams& params, const Matrix& acts,
                               const BitRows& labels, const RowSplit& split,
                               const Config& cfg) {
  require(acts.rows == labels.rows(), ErrorKind::Dimension,
          "activations and labels are not aligned");
  require(acts.cols == params.n, ErrorKind::Dimension,
          "SAE input width does not match activations");

  EvalReport rep;
  rep.n = params.n;
  rep.m = params.m;
  rep.variant = sae::variant_name(params.variant);
  rep.train_rows = split.train_rows.size();
  rep.test_rows = split.test_rows.size();

  Matrix train_x = gather_rows(acts, split.train_rows);
  Matrix test_x = gather_rows(acts, split.test_rows);
  BitRows train_y = gather_rows(labels, split.train_rows);
  BitRows test_y = gather_rows(labels, split.test_rows);

  Matrix train_f = sae::encode(params, train_x);
  Matrix test_f = sae::encode(params, test_x);
  std::vector<double> fmax = metrics::feature_max(train_f);

  rep.coverage = metrics::coverage(
      test_f, test_y, fmax,
      cfg.coverage_global_t ? metrics::CoverageMode::GlobalT
                            : metrics::CoverageMode::PerBspMax);

  metrics::ReconstructionOptions ropt;
  ropt.min_precision = cfg.min_precision;
  ropt.min_support = cfg.min_support;
  ropt.leak_faithful = cfg.recon_leak_mode;
  rep.reconstruction = metrics::reconstruction_score(train_f, train_y, test_f, test_y, fmax,
                                                     ropt);

  rep.l0 = metrics::l0(test_f);
  Matrix test_xhat = sae::decode(params, test_f);
  rep.fve = metrics::fraction_variance_explained(test_x, test_xhat);
  rep.gamma = metrics::reconstruction_bias(test_x, test_xhat);
  return rep;
}

// Loss recovered on the test games: H at sampled positions under no patch,
// SAE-reconstruction patch and zero patch.
inline LossRecoveredDetail loss_recovered_on_games(const sae::SaeParams& params,
                                                   const gpt::Model& model,
                                                   const std::vector<std::string>& lines,
                                                   const std::vector<std::uint32_t>& game_ids,
                                                   int layer, bool all_positions) {
  double sum_orig = 0.0, sum_star = 0.0, sum_zero = 0.0;
  std::size_t count = 0;
  for (std::uint32_t id : game_ids) {
    require(id < lines.size(), ErrorKind::Index, "manifest id outside corpus");
    const std::string& line = lines[id];
    std::vector<int> tokens = gpt::tokenize(model, line);
    if (tokens.size() < 2) continue;
    std::vector<std::size_t> positions;
    if (model.game == GameKind::Chess) {
      positions = chess_sample_positions(chess::parse_pgn(line));
    } else {
      positions.resize(tokens.size());
      for (std::size_t i = 0; i < tokens.size(); ++i) positions[i] = i;
    }
    if (positions.empty()) continue;

    Matrix acts = gpt::extract_activations(model, tokens, layer, positions);
    Matrix recon = sae::decode(params, sae::encode(params, acts));
    Matrix zeros(acts.rows, acts.cols);

    gpt::Forward orig = gpt::forward(model, tokens);
    gpt::Forward star = gpt::patched_forward(model, tokens, layer, positions, recon);
    gpt::Forward zero = gpt::patched_forward(model, tokens, layer, positions, zeros);

    gpt::CeSums so = all_positions ? gpt::ce_all_positions(orig, tokens)
                                   : gpt::ce_at_positions(orig, tokens, positions);
    gpt::CeSums ss = all_positions ? gpt::ce_all_positions(star, tokens)
                                   : gpt::ce_at_positions(star, tokens, positions);
    gpt::CeSums sz = all_positions ? gpt::ce_all_positions(zero, tokens)
                                   : gpt::ce_at_positions(zero, tokens, positions);
    sum_orig += so.total;
    sum_star += ss.total;
    sum_zero += sz.total;
    count += so.count;
  }
  require(count > 0, ErrorKind::Data, "no positions available for loss recovered");
  LossRecoveredDetail d;
  d.h_orig = sum_orig / double(count);
  d.h_star = sum_star / double(count);
  d.h_zero = sum_zero / double(count);
  d.positions = count;
  metrics::LossRecovered lr = metrics::loss_recovered(d.h_orig, d.h_star, d.h_zero);
  d.value = lr.value;
  d.outside_unit_interval = lr.outside_unit_interval;
  return d;
}

}  // namespace boardsae::experiment
