// boardsae: batch CLI wiring game generation, labeling, activation
// extraction, SAE training and evaluation into reproducible experiments.
//
// Exit codes: 0 success, 1 validation failure, 2 numeric failure.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "boardsae/experiment.hpp"
#include "boardsae/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace boardsae;

namespace {

// ---------------------------------------------------------------------------
// Provenance: config echo plus input-file hashes, written next to outputs.
// No timestamps, so identical inputs produce identical provenance.

struct Provenance {
  std::string command;
  std::map<std::string, std::string> config;
  std::map<std::string, std::string> inputs;   // path -> fnv1a hex
  std::vector<std::string> outputs;

  void add_input(const std::string& path) {
    char buf[24];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(io::file_hash(path)));
    inputs[path] = buf;
  }

  json to_json() const {
    json j;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = inputs;
    j["outputs"] = outputs;
    return j;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), ErrorKind::Format, "cannot write provenance: " + path);
    f << to_json().dump(2) << "\n";
  }
};

void write_json(const std::string& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorKind::Format, "cannot write: " + path);
  f << j.dump(2) << "\n";
}

json read_json(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorKind::Format, "cannot open: " + path);
  json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::Format, "bad JSON in " + path + ": " + e.what());
  }
  return j;
}

// ---------------------------------------------------------------------------
// gen-games

int cmd_gen_games(const std::string& game_name, std::size_t count, std::uint64_t seed,
                  const std::string& in, const std::string& out) {
  GameKind game = parse_game_kind(game_name);
  Provenance prov;
  prov.command = "gen-games";
  prov.config = {{"game", game_name},
                 {"count", std::to_string(count)},
                 {"seed", std::to_string(seed)}};

  if (game == GameKind::Othello) {
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < count; ++i)
      lines.push_back(othello::transcript_to_string(othello::random_game(seed + i)));
    io::write_lines(out, lines);
  } else if (game == GameKind::Chess) {
    // chess corpora are ingested and normalized, not generated
    require(!in.empty(), ErrorKind::Config, "--game chess requires --in <corpus>");
    prov.add_input(in);
    std::vector<std::string> lines = io::read_lines(in);
    std::vector<std::string> normalized;
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (lines[i].empty()) continue;
      try {
        chess::PgnGame g = chess::parse_pgn(lines[i]);
        require(!g.sans.empty(), ErrorKind::Parse, "no moves");
        std::string text;
        int fullmove = 1;
        for (std::size_t s = 0; s < g.sans.size(); ++s) {
          if (s % 2 == 0) {
            if (!text.empty()) text += ' ';
            text += std::to_string(fullmove) + ".";
          } else {
            text += ' ';
          }
          text += g.sans[s];
          if (s % 2 == 1) ++fullmove;
        }
        normalized.push_back(text);
      } catch (const Error& e) {
        problems.push_back("line " + std::to_string(i + 1) + ": " + e.what());
      }
    }
    if (!problems.empty()) {
      for (const std::string& p : problems) std::cerr << p << "\n";
      std::cerr << problems.size() << " invalid game(s)\n";
      return 1;
    }
    io::write_lines(out, normalized);
  } else {
    fail(ErrorKind::Config, "gen-games supports chess and othello");
  }
  prov.outputs = {out};
  prov.write(out + ".prov.json");
  std::cout << "wrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gen-model: tiny randomly initialized GPTs for testing pipelines.

int cmd_gen_model(const std::string& game_name, int layers, int heads, int dim, int max_seq,
                  std::uint64_t seed, const std::string& out) {
  GameKind game = parse_game_kind(game_name);
  require(game != GameKind::Synthetic, ErrorKind::Config, "models are chess or othello");
  gpt::Config cfg;
  cfg.n_layers = layers;
  cfg.n_heads = heads;
  cfg.d_model = dim;
  cfg.max_seq = max_seq;
  gpt::Model model = gpt::random_model(
      cfg, game, game == GameKind::Chess ? gpt::chess_vocab() : gpt::othello_vocab(), seed);
  gpt::save_model(out, model);

  Provenance prov;
  prov.command = "gen-model";
  prov.config = {{"game", game_name},        {"layers", std::to_string(layers)},
                 {"heads", std::to_string(heads)}, {"dim", std::to_string(dim)},
                 {"max_seq", std::to_string(max_seq)}, {"seed", std::to_string(seed)}};
  prov.outputs = {out};
  prov.write(out + ".prov.json");
  std::cout << "wrote " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gen-synth: ground-truth testbed activations + labels.

int cmd_gen_synth(std::size_t d, std::size_t m_true, std::size_t k, double sigma,
                  std::size_t count, std::uint64_t seed, const std::string& out_acts,
                  const std::string& out_labels) {
  synth::Dictionary dict = synth::make_dictionary(d, m_true, k, seed, sigma);
  synth::SynthData data = synth::sample_activations(dict, count, seed + 1);

  io::ActivationDataset ds;
  ds.game = GameKind::Synthetic;
  ds.layer = -1;
  ds.dim = std::uint32_t(d);
  ds.model_hash = dict.seed;
  for (std::size_t r = 0; r < count; ++r) {
    Vec row(d);
    for (std::size_t c = 0; c < d; ++c) row[c] = data.x(r, c);
    // one synthetic "game" per sample
    ds.append_row(row, std::uint32_t(r), 0);
  }
  io::write_dataset(out_acts, ds);

  io::LabelData labels;
  labels.game = GameKind::Synthetic;
  labels.catalog_hash = bsp::synthetic_catalog(m_true).hash();
  labels.rows = data.labels;
  io::write_labels(out_labels, labels);

  Provenance prov;
  prov.command = "gen-synth";
  prov.config = {{"d", std::to_string(d)},         {"m_true", std::to_string(m_true)},
                 {"k", std::to_string(k)},         {"sigma", experiment::format_double(sigma)},
                 {"count", std::to_string(count)}, {"seed", std::to_string(seed)}};
  prov.outputs = {out_acts, out_labels};
  prov.write(out_acts + ".prov.json");
  std::cout << "wrote " << out_acts << " and " << out_labels << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// label

int cmd_label(const std::string& game_name, const std::string& in,
              const std::string& catalog_name, const std::string& out) {
  GameKind game = parse_game_kind(game_name);
  bsp::ChessBlock block = bsp::ChessBlock::Full;
  if (catalog_name == "board")
    block = bsp::ChessBlock::BoardState;
  else if (catalog_name == "strategy")
    block = bsp::ChessBlock::Strategy;
  else if (catalog_name == "full")
    block = bsp::ChessBlock::Full;
  else
    fail(ErrorKind::Config, "--catalog must be board, strategy or full");

  std::vector<std::string> lines = io::read_lines(in);
  experiment::LabeledCorpus corpus = experiment::label_corpus(game, lines, block);
  io::write_labels(out, corpus.labels);

  Provenance prov;
  prov.command = "label";
  prov.config = {{"game", game_name}, {"catalog", catalog_name}};
  prov.add_input(in);
  prov.outputs = {out};
  prov.write(out + ".prov.json");
  std::cout << "labeled " << corpus.labels.rows.rows() << " positions -> " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// extract

int cmd_extract(const std::string& model_path, const std::string& game_file, int layer,
                const std::string& out) {
  gpt::Model model = gpt::load_model(model_path);
  require(layer >= 0 && layer < model.cfg.n_layers, ErrorKind::Index,
          "--layer must be in [0, " + std::to_string(model.cfg.n_layers) + ")");
  std::vector<std::string> lines = io::read_lines(game_file);
  io::ActivationDataset ds =
      experiment::extract_corpus(model, lines, layer, io::file_hash(model_path));
  io::write_dataset(out, ds);

  Provenance prov;
  prov.command = "extract";
  prov.config = {{"layer", std::to_string(layer)}};
  prov.add_input(model_path);
  prov.add_input(game_file);
  prov.outputs = {out};
  prov.write(out + ".prov.json");
  std::cout << "extracted " << ds.rows() << " rows -> " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train-sae

bool checkpoint_is_finished(const std::string& path, long total_steps) {
  if (!fs::exists(path)) return false;
  try {
    sae::Checkpoint c = sae::load_checkpoint(path);
    return std::stol(c.meta.at("step")) >= total_steps;
  } catch (...) {
    return false;
  }
}

int train_one(const experiment::Config& cfg, const std::string& data_path,
              const std::string& out_dir, bool quiet = false) {
  fs::create_directories(out_dir);
  std::string ckpt = (fs::path(out_dir) / "checkpoint.tensors").string();
  io::ActivationDataset ds = io::read_dataset(data_path);
  require(ds.rows() > 0, ErrorKind::Data, "empty activation dataset");
  sae::TrainConfig tc = cfg.train_config(ds.dim);

  if (checkpoint_is_finished(ckpt, tc.total_steps())) {
    if (!quiet) std::cout << "already finished: " << ckpt << "\n";
    return 0;
  }

  Matrix data = ds.to_matrix();
  sae::TrainResult result = sae::train(tc, data);

  std::map<std::string, std::string> echo = experiment::config_echo(cfg);
  sae::save_checkpoint(ckpt, result.params, echo, result.steps_run, result.final_p,
                       result.final_lambda);

  // training log as CSV
  std::ofstream log((fs::path(out_dir) / "train_log.csv").string(), std::ios::trunc);
  log << "step,p,lambda,total,recon,sparsity,aux,l0\n";
  for (const auto& e : result.log)
    log << e.step << "," << e.p << "," << e.lambda << "," << e.total << "," << e.recon << ","
        << e.sparsity << "," << e.aux << "," << e.l0 << "\n";

  Provenance prov;
  prov.command = "train-sae";
  prov.config = echo;
  prov.add_input(data_path);
  prov.outputs = {ckpt};
  prov.write((fs::path(out_dir) / "provenance.json").string());

  if (result.diverged) {
    std::cerr << "training diverged at step " << result.steps_run
              << "; last good step " << result.last_good_step << " checkpointed\n";
    return 2;
  }
  if (!quiet)
    std::cout << "trained " << result.steps_run << " steps (dead features: "
              << result.dead_features << ") -> " << ckpt << "\n";
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& out_dir) {
  experiment::Config cfg = experiment::load_config(config_path);
  return train_one(cfg, data_path, out_dir);
}

// ---------------------------------------------------------------------------
// sweep: cartesian grid over list-valued keys.

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t comma = s.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

int cmd_sweep(const std::string& grid_path, const std::string& data_path,
              const std::string& out_dir) {
  // grid files are config files whose values may be comma lists for
  // lambda_init, variant, p_anneal, expansion_factor and seed
  std::vector<std::string> lines = io::read_lines(grid_path);
  std::map<std::string, std::string> entries;
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
            "grid line " + std::to_string(i + 1) + ": expected key=value");
    entries[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }

  const std::vector<std::string> sweepable = {"lambda_init", "variant", "p_anneal",
                                              "expansion_factor", "seed"};
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
  experiment::Config base;
  for (const auto& [key, value] : entries) {
    bool listable = std::find(sweepable.begin(), sweepable.end(), key) != sweepable.end();
    if (listable && value.find(',') != std::string::npos) {
      axes.push_back({key, split_list(value)});
    } else {
      experiment::apply_config_entry(base, key, value);
    }
  }

  std::vector<std::map<std::string, std::string>> cells{{}};
  for (const auto& [key, values] : axes) {
    std::vector<std::map<std::string, std::string>> next;
    for (const auto& cell : cells)
      for (const std::string& v : values) {
        auto c = cell;
        c[key] = v;
        next.push_back(c);
      }
    cells = next;
  }

  long threads = 1;
  if (const char* env = std::getenv("BOARDSAE_THREADS")) threads = std::atol(env);
  if (threads < 1) threads = 1;

  std::vector<std::pair<std::string, experiment::Config>> jobs;
  for (const auto& cell : cells) {
    experiment::Config cfg = base;
    std::string name = "cell";
    for (const auto& [key, value] : cell) {
      experiment::apply_config_entry(cfg, key, value);
      name += "_" + key + "=" + value;
    }
    jobs.push_back({(fs::path(out_dir) / name).string(), cfg});
  }

  int rc = 0;
  for (std::size_t i = 0; i < jobs.size(); i += std::size_t(threads)) {
    std::vector<std::future<int>> batch;
    for (std::size_t j = i; j < std::min(jobs.size(), i + std::size_t(threads)); ++j)
      batch.push_back(std::async(std::launch::async, [&, j] {
        return train_one(jobs[j].second, data_path, jobs[j].first, true);
      }));
    for (auto& f : batch) rc = std::max(rc, f.get());
  }
  std::cout << "sweep: " << jobs.size() << " cells -> " << out_dir << "\n";
  return rc;
}

// ---------------------------------------------------------------------------
// eval

json gamma_json(const metrics::GammaResult& g) {
  json j;
  if (std::isfinite(g.gamma))
    j["value"] = g.gamma;
  else
    j["value"] = nullptr;
  j["unstable"] = g.unstable;
  return j;
}

int cmd_eval(const std::string& sae_path, const std::string& data_path,
             const std::string& labels_path, const std::string& model_path,
             const std::string& game_file, const std::string& manifest_path,
             const std::string& config_path, const std::string& out) {
  experiment::Config cfg;
  if (!config_path.empty()) cfg = experiment::load_config(config_path);

  sae::Checkpoint ckpt = sae::load_checkpoint(sae_path);
  io::ActivationDataset ds = io::read_dataset(data_path);
  io::LabelData labels = io::read_labels(labels_path);
  require(labels.rows.rows() == ds.rows(), ErrorKind::Data,
          "labels and activations have different row counts");
  require(labels.game == ds.game, ErrorKind::Data, "label/activation game mismatch");

  // catalog hash check: recompute for the known catalogs of this game
  if (ds.game == GameKind::Chess) {
    bool known = false;
    for (auto block : {bsp::ChessBlock::BoardState, bsp::ChessBlock::Strategy,
                       bsp::ChessBlock::Full})
      if (bsp::chess_catalog(block).hash() == labels.catalog_hash) known = true;
    require(known, ErrorKind::Data, "unrecognized chess catalog hash in label file");
  } else if (ds.game == GameKind::Othello) {
    require(bsp::othello_catalog().hash() == labels.catalog_hash, ErrorKind::Data,
            "unrecognized othello catalog hash in label file");
  } else {
    require(bsp::synthetic_catalog(labels.rows.bits()).hash() == labels.catalog_hash,
            ErrorKind::Data, "unrecognized synthetic catalog hash in label file");
  }

  std::set<std::uint32_t> distinct;
  for (const auto& p : ds.prov) distinct.insert(p.game_id);

  io::SplitManifest manifest;
  if (!manifest_path.empty()) {
    manifest = io::load_manifest(manifest_path);
  } else {
    std::size_t n_train = std::min(cfg.train_games, distinct.size() / 2);
    std::size_t n_test = std::min(cfg.test_games, distinct.size() - n_train);
    manifest = io::split_games(distinct.size(), cfg.split_seed, n_train, n_test);
  }

  experiment::RowSplit split = experiment::partition_rows(ds, manifest);
  Matrix acts = ds.to_matrix();
  experiment::EvalReport rep =
      experiment::evaluate_sae(ckpt.params, acts, labels.rows, split, cfg);

  if (!model_path.empty()) {
    require(!game_file.empty(), ErrorKind::Config, "--model requires --game-file");
    gpt::Model model = gpt::load_model(model_path);
    require(model.game == ds.game, ErrorKind::Data, "model game does not match dataset");
    std::vector<std::string> lines = io::read_lines(game_file);
    rep.loss_recovered = experiment::loss_recovered_on_games(
        ckpt.params, model, lines, manifest.test_ids, ds.layer, cfg.loss_all_positions);
  }

  json j;
  j["dataset"] = {{"game", game_kind_name(ds.game)},
                  {"rows", ds.rows()},
                  {"dim", ds.dim},
                  {"layer", ds.layer},
                  {"model_hash", ds.model_hash}};
  j["split"] = {{"seed", manifest.seed},
                {"train_games", manifest.train_ids.size()},
                {"test_games", manifest.test_ids.size()},
                {"train_rows", rep.train_rows},
                {"test_rows", rep.test_rows}};
  j["sae"] = {{"variant", rep.variant},
              {"n", rep.n},
              {"m", rep.m},
              {"step", ckpt.meta.count("step") ? ckpt.meta.at("step") : ""},
              {"lambda_init",
               ckpt.meta.count("cfg.lambda_init") ? ckpt.meta.at("cfg.lambda_init") : ""}};
  json metrics_j;
  metrics_j["l0"] = rep.l0;
  metrics_j["frac_variance_explained"] = rep.fve;
  metrics_j["gamma"] = gamma_json(rep.gamma);
  metrics_j["coverage"] = {{"mean", rep.coverage.mean},
                           {"mode", cfg.coverage_global_t ? "global_t" : "per_bsp"},
                           {"skipped_bsps", rep.coverage.skipped_bsps},
                           {"dead_features", rep.coverage.dead_features}};
  metrics_j["reconstruction"] = {{"mean_f1", rep.reconstruction.mean_f1},
                                 {"t_selected", rep.reconstruction.t_selected},
                                 {"scored_positions", rep.reconstruction.scored},
                                 {"skipped_positions", rep.reconstruction.skipped}};
  if (rep.loss_recovered) {
    metrics_j["loss_recovered"] = {{"value", rep.loss_recovered->value},
                                   {"outside_unit_interval",
                                    rep.loss_recovered->outside_unit_interval},
                                   {"h_orig", rep.loss_recovered->h_orig},
                                   {"h_star", rep.loss_recovered->h_star},
                                   {"h_zero", rep.loss_recovered->h_zero},
                                   {"positions", rep.loss_recovered->positions}};
  } else {
    metrics_j["loss_recovered"] = nullptr;  // explicit null when --model is omitted
  }
  j["metrics"] = metrics_j;

  Provenance prov;
  prov.command = "eval";
  prov.config = experiment::config_echo(cfg);
  prov.add_input(sae_path);
  prov.add_input(data_path);
  prov.add_input(labels_path);
  if (!model_path.empty()) prov.add_input(model_path);
  if (!game_file.empty()) prov.add_input(game_file);
  if (!manifest_path.empty()) prov.add_input(manifest_path);
  prov.outputs = {out};
  j["provenance"] = prov.to_json();

  write_json(out, j);

  // per-BSP CSV for plotting
  std::string csv_path = out + ".per_bsp.csv";
  std::ofstream csv(csv_path, std::ios::trunc);
  csv << "bsp_index,best_f1,best_feature,best_t\n";
  for (std::size_t g = 0; g < rep.coverage.per_bsp.size(); ++g) {
    if (rep.coverage.per_bsp[g] < 0) continue;
    csv << g << "," << rep.coverage.per_bsp[g] << "," << rep.coverage.best_feature[g] << ","
        << rep.coverage.best_t[g] << "\n";
  }
  std::cout << "eval -> " << out << " (coverage " << rep.coverage.mean << ", reconstruction "
            << rep.reconstruction.mean_f1 << ", l0 " << rep.l0 << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// probe: linear-probe baseline per BSP.

int cmd_probe(const std::string& data_path, const std::string& labels_path,
              const std::string& manifest_path, const std::string& config_path,
              const std::string& out) {
  experiment::Config cfg;
  if (!config_path.empty()) cfg = experiment::load_config(config_path);
  io::ActivationDataset ds = io::read_dataset(data_path);
  io::LabelData labels = io::read_labels(labels_path);
  require(labels.rows.rows() == ds.rows(), ErrorKind::Data,
          "labels and activations have different row counts");

  std::set<std::uint32_t> distinct;
  for (const auto& p : ds.prov) distinct.insert(p.game_id);
  io::SplitManifest manifest;
  if (!manifest_path.empty()) {
    manifest = io::load_manifest(manifest_path);
  } else {
    std::size_t n_train = std::min(cfg.train_games, distinct.size() / 2);
    std::size_t n_test = std::min(cfg.test_games, distinct.size() - n_train);
    manifest = io::split_games(distinct.size(), cfg.split_seed, n_train, n_test);
  }
  experiment::RowSplit split = experiment::partition_rows(ds, manifest);

  Matrix acts = ds.to_matrix();
  Matrix train_x = experiment::gather_rows(acts, split.train_rows);
  Matrix test_x = experiment::gather_rows(acts, split.test_rows);
  BitRows train_y = experiment::gather_rows(labels.rows, split.train_rows);
  BitRows test_y = experiment::gather_rows(labels.rows, split.test_rows);

  io::TensorFile probe_file;
  probe_file.meta["kind"] = "probes";
  std::ofstream csv(out + ".csv", std::ios::trunc);
  csv << "bsp_index,f1,train_positives,test_positives\n";
  double sum_f1 = 0.0;
  std::size_t scored = 0;
  for (std::size_t g = 0; g < train_y.bits(); ++g) {
    BitVec y_train = train_y.column(g);
    BitVec y_test = test_y.column(g);
    std::size_t pos = y_train.count();
    if (pos == 0 || pos == y_train.size() || y_test.count() == 0) continue;
    probes::ProbeConfig pc;
    pc.seed = cfg.seed + g;
    probes::Probe p = probes::train_probe(train_x, y_train, pc);
    double f1 = probes::probe_f1(p, test_x, y_test);
    csv << g << "," << f1 << "," << pos << "," << y_test.count() << "\n";
    sum_f1 += f1;
    ++scored;
    std::string name = "probe_" + std::to_string(g);
    Matrix w(1, p.w.size());
    w.a = p.w;
    probe_file.put(name + ".w", w);
    probe_file.put(name + ".b", Vec{p.b});
  }
  probe_file.meta["scored"] = std::to_string(scored);
  io::write_tensor_file(out, probe_file);
  std::cout << "probes: " << scored << " BSPs, mean F1 "
            << (scored ? sum_f1 / double(scored) : 0.0) << " -> " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report: merge eval reports into one CSV.

int cmd_report(const std::string& runs, const std::string& out_csv) {
  std::vector<std::string> report_paths;
  for (const std::string& entry : split_list(runs)) {
    if (entry.empty()) continue;
    if (fs::is_directory(entry)) {
      // accept a directory of run subdirectories or of report files
      std::vector<std::string> found;
      for (const auto& sub : fs::recursive_directory_iterator(entry))
        if (sub.is_regular_file() && sub.path().filename() == "report.json")
          found.push_back(sub.path().string());
      std::sort(found.begin(), found.end());
      report_paths.insert(report_paths.end(), found.begin(), found.end());
    } else {
      report_paths.push_back(entry);
    }
  }
  require(!report_paths.empty(), ErrorKind::Data, "no reports found under " + runs);

  std::ofstream csv(out_csv, std::ios::trunc);
  csv << "run,variant,lambda_init,m,l0,loss_recovered,coverage,reconstruction,gamma,fve\n";
  for (const std::string& path : report_paths) {
    json j = read_json(path);
    const json& m = j.at("metrics");
    csv << path << "," << j.at("sae").value("variant", "") << ","
        << j.at("sae").value("lambda_init", "") << "," << j.at("sae").at("m").dump() << ","
        << m.at("l0").dump() << ",";
    if (m.at("loss_recovered").is_null())
      csv << "";
    else
      csv << m.at("loss_recovered").at("value").dump();
    csv << "," << m.at("coverage").at("mean").dump() << ","
        << m.at("reconstruction").at("mean_f1").dump() << ",";
    if (m.at("gamma").at("value").is_null())
      csv << "";
    else
      csv << m.at("gamma").at("value").dump();
    csv << "," << m.at("frac_variance_explained").dump() << "\n";
  }
  std::cout << "report: " << report_paths.size() << " runs -> " << out_csv << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sparse autoencoder training and evaluation for board-game models"};
  app.require_subcommand(1);

  // gen-games
  auto* gen_games = app.add_subcommand(
      "gen-games", "generate Othello transcripts or validate/normalize a chess corpus");
  std::string gg_game, gg_in, gg_out;
  std::size_t gg_count = 1000;
  std::uint64_t gg_seed = 0;
  gen_games->add_option("--game", gg_game, "chess|othello")->required();
  gen_games->add_option("--count", gg_count, "games to generate (othello)");
  gen_games->add_option("--seed", gg_seed, "generator seed");
  gen_games->add_option("--in", gg_in, "input corpus (chess)");
  gen_games->add_option("--out", gg_out, "output game file")->required();

  // gen-model
  auto* gen_model =
      app.add_subcommand("gen-model", "write a small randomly initialized GPT weight file");
  std::string gm_game, gm_out;
  int gm_layers = 2, gm_heads = 2, gm_dim = 32, gm_max_seq = 512;
  std::uint64_t gm_seed = 0;
  gen_model->add_option("--game", gm_game, "chess|othello")->required();
  gen_model->add_option("--layers", gm_layers, "transformer blocks");
  gen_model->add_option("--heads", gm_heads, "attention heads");
  gen_model->add_option("--dim", gm_dim, "model width");
  gen_model->add_option("--max-seq", gm_max_seq, "context limit");
  gen_model->add_option("--seed", gm_seed, "init seed");
  gen_model->add_option("--out", gm_out, "output weight file")->required();

  // gen-synth
  auto* gen_synth = app.add_subcommand(
      "gen-synth", "generate ground-truth superposition activations and labels");
  std::size_t gs_d = 16, gs_mtrue = 64, gs_k = 3, gs_count = 200000;
  double gs_sigma = 0.0;
  std::uint64_t gs_seed = 7;
  std::string gs_out_acts, gs_out_labels;
  gen_synth->add_option("--dim", gs_d, "ambient dimension");
  gen_synth->add_option("--m-true", gs_mtrue, "planted dictionary size");
  gen_synth->add_option("--k", gs_k, "active features per sample");
  gen_synth->add_option("--sigma", gs_sigma, "isotropic noise level");
  gen_synth->add_option("--count", gs_count, "samples");
  gen_synth->add_option("--seed", gs_seed, "dictionary seed");
  gen_synth->add_option("--out", gs_out_acts, "output activation dataset")->required();
  gen_synth->add_option("--out-labels", gs_out_labels, "output label file")->required();

  // label
  auto* label = app.add_subcommand("label", "compute BSP labels for a game corpus");
  std::string lb_game, lb_in, lb_catalog = "full", lb_out;
  label->add_option("--game", lb_game, "chess|othello")->required();
  label->add_option("--in", lb_in, "game file")->required();
  label->add_option("--catalog", lb_catalog, "board|strategy|full (chess only)");
  label->add_option("--out", lb_out, "output label file")->required();

  // extract
  auto* extract =
      app.add_subcommand("extract", "extract residual-stream activations from a model");
  std::string ex_model, ex_games, ex_out;
  int ex_layer = 6;
  extract->add_option("--model", ex_model, "model weight file")->required();
  extract->add_option("--game-file", ex_games, "game corpus")->required();
  extract->add_option("--layer", ex_layer, "block index (post-MLP residual)");
  extract->add_option("--out", ex_out, "output activation dataset")->required();

  // train-sae
  auto* train = app.add_subcommand("train-sae", "train one SAE from a config file");
  std::string tr_config, tr_data, tr_out;
  train->add_option("--config", tr_config, "key=value config file")->required();
  train->add_option("--data", tr_data, "activation dataset")->required();
  train->add_option("--out", tr_out, "output run directory")->required();

  // sweep
  auto* sweep = app.add_subcommand("sweep", "train a cartesian grid of SAEs");
  std::string sw_grid, sw_data, sw_out;
  sweep->add_option("--grid", sw_grid, "grid config (comma lists allowed)")->required();
  sweep->add_option("--data", sw_data, "activation dataset")->required();
  sweep->add_option("--out", sw_out, "output directory, one subdir per cell")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "compute the metric suite for one SAE");
  std::string ev_sae, ev_data, ev_labels, ev_model, ev_games, ev_manifest, ev_config, ev_out;
  eval->add_option("--sae", ev_sae, "SAE checkpoint")->required();
  eval->add_option("--data", ev_data, "activation dataset")->required();
  eval->add_option("--labels", ev_labels, "label file")->required();
  eval->add_option("--model", ev_model, "model weights (enables loss recovered)");
  eval->add_option("--game-file", ev_games, "game corpus (with --model)");
  eval->add_option("--manifest", ev_manifest, "split manifest JSON");
  eval->add_option("--config", ev_config, "metric options config");
  eval->add_option("--out", ev_out, "output report JSON")->required();

  // probe
  auto* probe = app.add_subcommand("probe", "train linear-probe baselines per BSP");
  std::string pr_data, pr_labels, pr_manifest, pr_config, pr_out;
  probe->add_option("--data", pr_data, "activation dataset")->required();
  probe->add_option("--labels", pr_labels, "label file")->required();
  probe->add_option("--manifest", pr_manifest, "split manifest JSON");
  probe->add_option("--config", pr_config, "config file");
  probe->add_option("--out", pr_out, "output probe set file")->required();

  // report
  auto* report = app.add_subcommand("report", "merge eval reports into a CSV");
  std::string rp_runs, rp_out;
  report->add_option("--runs", rp_runs, "run directory or comma list of reports")->required();
  report->add_option("--out-csv", rp_out, "output CSV")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_games->parsed())
      return cmd_gen_games(gg_game, gg_count, gg_seed, gg_in, gg_out);
    if (gen_model->parsed())
      return cmd_gen_model(gm_game, gm_layers, gm_heads, gm_dim, gm_max_seq, gm_seed, gm_out);
    if (gen_synth->parsed())
      return cmd_gen_synth(gs_d, gs_mtrue, gs_k, gs_sigma, gs_count, gs_seed, gs_out_acts,
                           gs_out_labels);
    if (label->parsed()) return cmd_label(lb_game, lb_in, lb_catalog, lb_out);
    if (extract->parsed()) return cmd_extract(ex_model, ex_games, ex_layer, ex_out);
    if (train->parsed()) return cmd_train(tr_config, tr_data, tr_out);
    if (sweep->parsed()) return cmd_sweep(sw_grid, sw_data, sw_out);
    if (eval->parsed())
      return cmd_eval(ev_sae, ev_data, ev_labels, ev_model, ev_games, ev_manifest, ev_config,
                      ev_out);
    if (probe->parsed()) return cmd_probe(pr_data, pr_labels, pr_manifest, pr_config, pr_out);
    if (report->parsed()) return cmd_report(rp_runs, rp_out);
  } catch (const Error& e) {
    std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what();
    if (e.offset() >= 0) std::cerr << " [offset " << e.offset() << "]";
    std::cerr << "\n";
    return e.kind() == ErrorKind::Numeric ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
