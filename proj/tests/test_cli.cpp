#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <json.hpp>

#include "boardsae/chess.hpp"
#include "boardsae/io.hpp"
#include "boardsae/othello.hpp"
#include "support/game_gen.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* cli_path() { return BOARDSAE_CLI_PATH; }

struct Workspace {
  fs::path dir;
  Workspace() {
    dir = fs::temp_directory_path() /
          ("boardsae_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }
  std::string p(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  std::string cmd = std::string(cli_path()) + " " + args + " >/dev/null 2>&1";
  int rc = std::system(cmd.c_str());
  return WEXITSTATUS(rc);
}

json read_json_file(const std::string& path) {
  std::ifstream f(path);
  REQUIRE(f.good());
  json j;
  f >> j;
  return j;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  f << text;
}

}  // namespace

TEST_CASE("gen-games othello is deterministic and replayable") {
  Workspace ws;
  REQUIRE(run("gen-games --game othello --count 10 --seed 7 --out " + ws.p("a.txt")) == 0);
  REQUIRE(run("gen-games --game othello --count 10 --seed 7 --out " + ws.p("b.txt")) == 0);
  auto a = boardsae::io::read_lines(ws.p("a.txt"));
  auto b = boardsae::io::read_lines(ws.p("b.txt"));
  REQUIRE(a == b);
  REQUIRE(a.size() == 10);
  for (const std::string& line : a) boardsae::othello::parse_transcript(line);
}

TEST_CASE("gen-games chess validates and reports bad lines") {
  Workspace ws;
  std::string good1 = testsupport::random_chess_movetext(3, 10);
  std::string good2 = testsupport::random_chess_movetext(4, 10);
  write_file(ws.p("corpus.txt"), good1 + "\n1.e9 bad\n" + good2 + "\n");
  REQUIRE(run("gen-games --game chess --in " + ws.p("corpus.txt") + " --out " +
              ws.p("norm.txt")) == 1);

  write_file(ws.p("ok.txt"), good1 + "\n" + good2 + " 1-0\n");
  REQUIRE(run("gen-games --game chess --in " + ws.p("ok.txt") + " --out " +
              ws.p("norm.txt")) == 0);
  auto lines = boardsae::io::read_lines(ws.p("norm.txt"));
  REQUIRE(lines.size() == 2);
  for (const std::string& l : lines) boardsae::chess::parse_pgn(l);  // normalized = valid
  REQUIRE(lines[1].find("1-0") == std::string::npos);  // result token stripped
}

TEST_CASE("full pipeline: model, labels, activations, training, eval, report") {
  Workspace ws;
  REQUIRE(run("gen-games --game othello --count 12 --seed 3 --out " + ws.p("games.txt")) ==
          0);
  REQUIRE(run("gen-model --game othello --layers 2 --heads 2 --dim 16 --max-seq 128 "
              "--seed 5 --out " +
              ws.p("model.tensors")) == 0);

  // labels align 1:1 with extraction rows
  REQUIRE(run("label --game othello --in " + ws.p("games.txt") + " --out " +
              ws.p("g.labels")) == 0);
  REQUIRE(run("extract --model " + ws.p("model.tensors") + " --game-file " +
              ws.p("games.txt") + " --layer 1 --out " + ws.p("g.acts")) == 0);
  auto labels = boardsae::io::read_labels(ws.p("g.labels"));
  auto acts = boardsae::io::read_dataset(ws.p("g.acts"));
  REQUIRE(labels.rows.rows() == acts.rows());
  std::size_t total_tokens = 0;
  for (const std::string& line : boardsae::io::read_lines(ws.p("games.txt")))
    total_tokens += boardsae::othello::parse_transcript(line).moves.size();
  REQUIRE(acts.rows() == total_tokens);

  // layer out of range is a validation error
  REQUIRE(run("extract --model " + ws.p("model.tensors") + " --game-file " +
              ws.p("games.txt") + " --layer 5 --out " + ws.p("bad.acts")) == 1);

  // train + eval without model: loss_recovered is an explicit null
  write_file(ws.p("cfg.txt"),
             "game = othello\nsample_budget = 12000\nbatch_size = 64\n"
             "learning_rate = 1e-3\nwarmup_steps = 20\nexpansion_factor = 4\n"
             "lambda_init = 0.05\nseed = 2\ntrain_games = 6\ntest_games = 6\n");
  REQUIRE(run("train-sae --config " + ws.p("cfg.txt") + " --data " + ws.p("g.acts") +
              " --out " + ws.p("run")) == 0);
  REQUIRE(fs::exists(ws.p("run") + "/checkpoint.tensors"));
  REQUIRE(fs::exists(ws.p("run") + "/train_log.csv"));
  REQUIRE(run("eval --sae " + ws.p("run") + "/checkpoint.tensors --data " + ws.p("g.acts") +
              " --labels " + ws.p("g.labels") + " --config " + ws.p("cfg.txt") + " --out " +
              ws.p("run") + "/report.json") == 0);
  json rep = read_json_file(ws.p("run") + "/report.json");
  REQUIRE(rep["metrics"]["loss_recovered"].is_null());
  REQUIRE(rep["metrics"]["l0"].is_number());
  REQUIRE(rep["provenance"]["config"].contains("lambda_init"));

  // eval with model: loss recovered appears
  REQUIRE(run("eval --sae " + ws.p("run") + "/checkpoint.tensors --data " + ws.p("g.acts") +
              " --labels " + ws.p("g.labels") + " --config " + ws.p("cfg.txt") +
              " --model " + ws.p("model.tensors") + " --game-file " + ws.p("games.txt") +
              " --out " + ws.p("run") + "/report_lr.json") == 0);
  json rep2 = read_json_file(ws.p("run") + "/report_lr.json");
  REQUIRE(rep2["metrics"]["loss_recovered"].is_object());
  REQUIRE(rep2["metrics"]["loss_recovered"]["value"].is_number());

  // report merges both runs
  REQUIRE(run("report --runs " + ws.p("run") + "/report.json," + ws.p("run") +
              "/report_lr.json --out-csv " + ws.p("merged.csv")) == 0);
  auto csv = boardsae::io::read_lines(ws.p("merged.csv"));
  REQUIRE(csv.size() == 3);  // header + 2 runs

  // probes
  REQUIRE(run("probe --data " + ws.p("g.acts") + " --labels " + ws.p("g.labels") +
              " --config " + ws.p("cfg.txt") + " --out " + ws.p("probes.tensors")) == 0);
  REQUIRE(fs::exists(ws.p("probes.tensors.csv")));
}

TEST_CASE("sweep runs the cartesian grid") {
  Workspace ws;
  REQUIRE(run("gen-synth --dim 8 --m-true 16 --k 2 --count 4000 --seed 11 --out " +
              ws.p("s.acts") + " --out-labels " + ws.p("s.labels")) == 0);
  write_file(ws.p("grid.txt"),
             "game = synthetic\nsample_budget = 8000\nbatch_size = 64\n"
             "learning_rate = 1e-3\nwarmup_steps = 10\nexpansion_factor = 2\n"
             "lambda_init = 0.05,0.2\nvariant = standard,gated\nseed = 4\n");
  REQUIRE(run("sweep --grid " + ws.p("grid.txt") + " --data " + ws.p("s.acts") + " --out " +
              ws.p("sweep")) == 0);
  std::size_t checkpoints = 0;
  for (const auto& e : fs::recursive_directory_iterator(ws.p("sweep")))
    if (e.is_regular_file() && e.path().filename() == "checkpoint.tensors") ++checkpoints;
  REQUIRE(checkpoints == 4);  // 2 lambdas x 2 variants
}

TEST_CASE("train-sae is a no-op when the run is already finished") {
  Workspace ws;
  REQUIRE(run("gen-synth --dim 6 --m-true 8 --k 2 --count 1000 --seed 2 --out " +
              ws.p("s.acts") + " --out-labels " + ws.p("s.labels")) == 0);
  write_file(ws.p("cfg.txt"),
             "game = synthetic\nsample_budget = 2000\nbatch_size = 50\n"
             "learning_rate = 1e-3\nwarmup_steps = 5\nexpansion_factor = 2\n"
             "lambda_init = 0.1\nseed = 1\n");
  REQUIRE(run("train-sae --config " + ws.p("cfg.txt") + " --data " + ws.p("s.acts") +
              " --out " + ws.p("run")) == 0);
  auto t0 = fs::last_write_time(ws.p("run") + "/checkpoint.tensors");
  REQUIRE(run("train-sae --config " + ws.p("cfg.txt") + " --data " + ws.p("s.acts") +
              " --out " + ws.p("run")) == 0);
  REQUIRE(fs::last_write_time(ws.p("run") + "/checkpoint.tensors") == t0);
}

TEST_CASE("unknown config keys are rejected") {
  Workspace ws;
  write_file(ws.p("bad.txt"), "game = othello\nnot_a_key = 3\n");
  write_file(ws.p("dummy"), "");
  REQUIRE(run("train-sae --config " + ws.p("bad.txt") + " --data " + ws.p("dummy") +
              " --out " + ws.p("x")) == 1);
}

TEST_CASE("split overlap is refused") {
  Workspace ws;
  REQUIRE(run("gen-games --game othello --count 6 --seed 9 --out " + ws.p("games.txt")) ==
          0);
  REQUIRE(run("gen-model --game othello --layers 1 --heads 1 --dim 8 --max-seq 128 "
              "--seed 1 --out " +
              ws.p("m.tensors")) == 0);
  REQUIRE(run("label --game othello --in " + ws.p("games.txt") + " --out " +
              ws.p("g.labels")) == 0);
  REQUIRE(run("extract --model " + ws.p("m.tensors") + " --game-file " + ws.p("games.txt") +
              " --layer 0 --out " + ws.p("g.acts")) == 0);
  write_file(ws.p("cfg.txt"),
             "game = othello\nsample_budget = 600\nbatch_size = 30\nexpansion_factor = 2\n"
             "learning_rate = 1e-3\nwarmup_steps = 5\nlambda_init = 0.1\n");
  REQUIRE(run("train-sae --config " + ws.p("cfg.txt") + " --data " + ws.p("g.acts") +
              " --out " + ws.p("run")) == 0);
  write_file(ws.p("overlap.json"), "{\"seed\":0,\"train\":[0,1,2],\"test\":[2,3,4]}");
  REQUIRE(run("eval --sae " + ws.p("run") + "/checkpoint.tensors --data " + ws.p("g.acts") +
              " --labels " + ws.p("g.labels") + " --manifest " + ws.p("overlap.json") +
              " --out " + ws.p("r.json")) == 1);
}
