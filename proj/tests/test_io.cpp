#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "boardsae/io.hpp"

using namespace boardsae;
using namespace boardsae::io;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("boardsae_io_test_" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

ActivationDataset sample_dataset(std::size_t rows, std::uint32_t dim, std::uint64_t seed) {
  ActivationDataset d;
  d.game = GameKind::Othello;
  d.layer = 3;
  d.dim = dim;
  d.model_hash = 0xabcdef0123456789ull;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  for (std::size_t r = 0; r < rows; ++r) {
    Vec row(dim);
    for (double& v : row) v = dist(rng);
    d.append_row(row, std::uint32_t(r / 7), std::uint32_t(r % 7));
  }
  return d;
}

}  // namespace

TEST_CASE("activation dataset round trip is bit identical") {
  TempDir tmp;
  ActivationDataset d = sample_dataset(40, 6, 1);
  std::string path = tmp.file("a.acts");
  write_dataset(path, d);
  ActivationDataset back = read_dataset(path);
  REQUIRE(back == d);

  // writing the read-back dataset reproduces the same file hash
  std::string path2 = tmp.file("b.acts");
  write_dataset(path2, back);
  REQUIRE(file_hash(path) == file_hash(path2));
}

TEST_CASE("empty dataset round trips") {
  TempDir tmp;
  ActivationDataset d;
  d.game = GameKind::Chess;
  d.layer = 0;
  d.dim = 8;
  std::string path = tmp.file("empty.acts");
  write_dataset(path, d);
  ActivationDataset back = read_dataset(path);
  REQUIRE(back.rows() == 0);
  REQUIRE(back == d);
}

TEST_CASE("corrupted header fails cleanly") {
  TempDir tmp;
  ActivationDataset d = sample_dataset(4, 3, 2);
  std::string path = tmp.file("c.acts");
  write_dataset(path, d);

  auto bytes = detail::read_file(path);
  bytes[2] ^= 0xff;  // corrupt the magic
  detail::write_file(path, bytes);
  try {
    read_dataset(path);
    FAIL("expected format error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Format);
  }

  // truncation names a byte offset
  auto good = detail::read_file(tmp.file("c.acts"));
  write_dataset(path, d);
  good = detail::read_file(path);
  good.resize(good.size() - 5);
  detail::write_file(path, good);
  try {
    read_dataset(path);
    FAIL("expected format error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Format);
    REQUIRE(std::string(e.what()).find("offset") != std::string::npos);
  }
}

TEST_CASE("tensor file stores meta, vocab and named tensors") {
  TempDir tmp;
  TensorFile tf;
  tf.meta["kind"] = "test";
  tf.meta["note"] = "hello=world";
  tf.vocab = {"a", "--", ";"};
  Matrix m(2, 3);
  for (std::size_t i = 0; i < m.a.size(); ++i) m.a[i] = double(i) + 0.5;
  tf.put("weights", m);
  Vec v{1.0, -2.0, 3.25};
  tf.put("bias", v);

  std::string path = tmp.file("t.tensors");
  write_tensor_file(path, tf);
  TensorFile back = read_tensor_file(path);
  REQUIRE(back.meta == tf.meta);
  REQUIRE(back.vocab == tf.vocab);
  REQUIRE(back.matrix("weights").a == m.a);
  REQUIRE(back.vec("bias") == v);
  REQUIRE_THROWS_AS(back.tensor("missing"), Error);
}

TEST_CASE("label file round trip") {
  TempDir tmp;
  LabelData l;
  l.game = GameKind::Chess;
  l.catalog_hash = 42;
  l.rows = BitRows(5, 77);
  std::mt19937_64 rng(3);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t b = 0; b < 77; ++b)
      if (rng() & 1) l.rows.set(r, b);
  std::string path = tmp.file("l.labels");
  write_labels(path, l);
  LabelData back = read_labels(path);
  REQUIRE(back.game == l.game);
  REQUIRE(back.catalog_hash == l.catalog_hash);
  REQUIRE(back.rows == l.rows);
}

TEST_CASE("split_games is deterministic and disjoint") {
  SplitManifest a = split_games(2500, 11, 1000, 1000);
  SplitManifest b = split_games(2500, 11, 1000, 1000);
  REQUIRE(a.train_ids == b.train_ids);
  REQUIRE(a.test_ids == b.test_ids);
  REQUIRE(a.train_ids.size() == 1000);
  REQUIRE(a.test_ids.size() == 1000);
  REQUIRE(a.disjoint());

  SplitManifest c = split_games(2500, 12, 1000, 1000);
  REQUIRE(a.train_ids != c.train_ids);

  try {
    split_games(100, 1, 80, 40);
    FAIL("expected size error");
  } catch (const Error& e) {
    REQUIRE(e.kind() == ErrorKind::Data);
  }
}

TEST_CASE("manifest save/load round trip") {
  TempDir tmp;
  SplitManifest m = split_games(50, 5, 20, 20);
  std::string path = tmp.file("split.json");
  save_manifest(path, m);
  SplitManifest back = load_manifest(path);
  REQUIRE(back.seed == m.seed);
  REQUIRE(back.train_ids == m.train_ids);
  REQUIRE(back.test_ids == m.test_ids);
}

TEST_CASE("line io round trips") {
  TempDir tmp;
  std::vector<std::string> lines = {"1.e4 e5 2.Nf3", "", "d3 c5 --"};
  std::string path = tmp.file("games.txt");
  write_lines(path, lines);
  REQUIRE(read_lines(path) == lines);
}
