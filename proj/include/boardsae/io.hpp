#pragma once

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "boardsae/bits.hpp"
#include "boardsae/common.hpp"
#include "boardsae/errors.hpp"
#include "boardsae/linalg.hpp"

// Binary file formats (activation datasets, packed label rows, the shared
// named-tensor container) and train/test split management. All multi-byte
// values are little-endian; floats are 32-bit on disk.

namespace boardsae::io {

namespace detail {

struct Writer {
  std::vector<unsigned char> buf;

  void bytes(const void* p, std::size_t n) {
    const unsigned char* c = static_cast<const unsigned char*>(p);
    buf.insert(buf.end(), c, c + n);
  }
  void u8(std::uint8_t v) { buf.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back((v >> (8 * i)) & 0xff);
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf.push_back((v >> (8 * i)) & 0xff);
  }
  void i32(std::int32_t v) { u32(std::uint32_t(v)); }
  void f32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    u32(bits);
  }
  void str(const std::string& s) {
    u32(std::uint32_t(s.size()));
    bytes(s.data(), s.size());
  }
};

struct Reader {
  const unsigned char* p;
  std::size_t n;
  std::size_t pos = 0;

  void need(std::size_t k) {
    require(pos + k <= n, ErrorKind::Format,
            "truncated file at byte offset " + std::to_string(pos), long(pos));
  }
  void bytes(void* out, std::size_t k) {
    need(k);
    std::memcpy(out, p + pos, k);
    pos += k;
  }
  std::uint8_t u8() {
    need(1);
    return p[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[pos + i]) << (8 * i);
    pos += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[pos + i]) << (8 * i);
    pos += 8;
    return v;
  }
  std::int32_t i32() { return std::int32_t(u32()); }
  float f32() {
    std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(std::size_t max_len = 1u << 20) {
    std::uint32_t len = u32();
    require(len <= max_len, ErrorKind::Format,
            "string length out of range at offset " + std::to_string(pos), long(pos));
    std::string s(len, '\0');
    bytes(s.data(), len);
    return s;
  }
  void done() {
    require(pos == n, ErrorKind::Format,
            "trailing bytes after payload at offset " + std::to_string(pos), long(pos));
  }
};

inline void write_file(const std::string& path, const std::vector<unsigned char>& buf) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorKind::Format, "cannot open for writing: " + path);
  f.write(reinterpret_cast<const char*>(buf.data()), std::streamsize(buf.size()));
  require(f.good(), ErrorKind::Format, "write failed: " + path);
}

inline std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  require(f.good(), ErrorKind::Format, "cannot open: " + path);
  std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<unsigned char> buf(static_cast<std::size_t>(size));
  f.read(reinterpret_cast<char*>(buf.data()), size);
  require(f.good(), ErrorKind::Format, "read failed: " + path);
  return buf;
}

inline void check_magic(Reader& r, const char* magic) {
  char got[8];
  r.bytes(got, 8);
  require(std::memcmp(got, magic, 8) == 0, ErrorKind::Format,
          std::string("bad magic, expected ") + magic, 0);
}

}  // namespace detail

inline std::uint64_t file_hash(const std::string& path) {
  auto buf = detail::read_file(path);
  return fnv1a_bytes(buf.data(), buf.size());
}

// ---------------------------------------------------------------------------
// Named-tensor container, shared by model weights, SAE checkpoints and probes.

struct TensorFile {
  std::map<std::string, std::string> meta;  // small key=value header entries
  std::vector<std::string> vocab;           // token strings; empty when unused
  struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<float> data;
  };
  std::map<std::string, Tensor> tensors;  // order-independent lookup by name

  const Tensor& tensor(const std::string& name) const {
    auto it = tensors.find(name);
    require(it != tensors.end(), ErrorKind::Format, "missing tensor: " + name);
    return it->second;
  }
  bool has(const std::string& name) const { return tensors.count(name) != 0; }

  void put(const std::string& name, const Matrix& m) {
    Tensor t;
    t.shape = {m.rows, m.cols};
    t.data.assign(m.a.begin(), m.a.end());
    tensors[name] = std::move(t);
  }
  void put(const std::string& name, const Vec& v) {
    Tensor t;
    t.shape = {v.size()};
    t.data.assign(v.begin(), v.end());
    tensors[name] = std::move(t);
  }
  Matrix matrix(const std::string& name) const {
    const Tensor& t = tensor(name);
    require(t.shape.size() == 2, ErrorKind::Format, "tensor is not 2-d: " + name);
    Matrix m(t.shape[0], t.shape[1]);
    for (std::size_t i = 0; i < t.data.size(); ++i) m.a[i] = double(t.data[i]);
    return m;
  }
  Vec vec(const std::string& name) const {
    const Tensor& t = tensor(name);
    require(t.shape.size() == 1, ErrorKind::Format, "tensor is not 1-d: " + name);
    return Vec(t.data.begin(), t.data.end());
  }
};

constexpr char kTensorMagic[9] = "BSTNSR01";

inline void write_tensor_file(const std::string& path, const TensorFile& tf) {
  detail::Writer w;
  w.bytes(kTensorMagic, 8);
  w.u32(1);  // version
  w.u32(std::uint32_t(tf.meta.size()));
  for (const auto& [k, v] : tf.meta) {
    w.str(k);
    w.str(v);
  }
  w.u32(std::uint32_t(tf.vocab.size()));
  for (const std::string& t : tf.vocab) w.str(t);
  w.u32(std::uint32_t(tf.tensors.size()));
  for (const auto& [name, t] : tf.tensors) {
    w.str(name);
    w.u32(std::uint32_t(t.shape.size()));
    std::size_t total = 1;
    for (std::size_t d : t.shape) {
      w.u64(d);
      total *= d;
    }
    require(total == t.data.size(), ErrorKind::Dimension,
            "tensor data does not match shape: " + name);
    for (float v : t.data) w.f32(v);
  }
  detail::write_file(path, w.buf);
}

inline TensorFile read_tensor_file(const std::string& path) {
  auto buf = detail::read_file(path);
  detail::Reader r{buf.data(), buf.size()};
  detail::check_magic(r, kTensorMagic);
  std::uint32_t version = r.u32();
  require(version == 1, ErrorKind::Format, "unsupported tensor-file version");
  TensorFile tf;
  std::uint32_t nmeta = r.u32();
  for (std::uint32_t i = 0; i < nmeta; ++i) {
    std::string k = r.str();
    tf.meta[k] = r.str();
  }
  std::uint32_t nvocab = r.u32();
  for (std::uint32_t i = 0; i < nvocab; ++i) tf.vocab.push_back(r.str());
  std::uint32_t ntensors = r.u32();
  for (std::uint32_t i = 0; i < ntensors; ++i) {
    std::string name = r.str();
    TensorFile::Tensor t;
    std::uint32_t ndim = r.u32();
    require(ndim <= 4, ErrorKind::Format, "tensor rank out of range: " + name);
    std::size_t total = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      std::uint64_t dim = r.u64();
      t.shape.push_back(std::size_t(dim));
      total *= std::size_t(dim);
    }
    require(total <= (std::size_t(1) << 33), ErrorKind::Format, "tensor too large: " + name);
    t.data.resize(total);
    for (std::size_t j = 0; j < total; ++j) t.data[j] = r.f32();
    tf.tensors[name] = std::move(t);
  }
  r.done();
  return tf;
}

// ---------------------------------------------------------------------------
// Activation dataset: f32 rows plus (game id, token position) provenance.

struct ActivationDataset {
  GameKind game = GameKind::Synthetic;
  std::int32_t layer = -1;
  std::uint32_t dim = 0;
  std::uint64_t model_hash = 0;
  std::vector<float> data;  // rows * dim
  struct Prov {
    std::uint32_t game_id = 0;
    std::uint32_t token_pos = 0;
    friend bool operator==(const Prov&, const Prov&) = default;
  };
  std::vector<Prov> prov;

  std::size_t rows() const { return dim == 0 ? 0 : data.size() / dim; }

  void append_row(const Vec& row, std::uint32_t game_id, std::uint32_t token_pos) {
    require(row.size() == dim, ErrorKind::Dimension, "activation row width mismatch");
    for (double v : row) data.push_back(float(v));
    prov.push_back({game_id, token_pos});
  }

  Matrix to_matrix() const {
    Matrix m(rows(), dim);
    for (std::size_t i = 0; i < data.size(); ++i) m.a[i] = double(data[i]);
    return m;
  }

  friend bool operator==(const ActivationDataset& a, const ActivationDataset& b) {
    return a.game == b.game && a.layer == b.layer && a.dim == b.dim &&
           a.model_hash == b.model_hash && a.data == b.data && a.prov == b.prov;
  }
};

constexpr char kActsMagic[9] = "BSACTS01";

inline void write_dataset(const std::string& path, const ActivationDataset& d) {
  require(d.dim != 0 || d.data.empty(), ErrorKind::Dimension, "dataset with zero dim");
  require(d.prov.size() == d.rows(), ErrorKind::Dimension,
          "provenance rows do not match data rows");
  detail::Writer w;
  w.bytes(kActsMagic, 8);
  w.u32(1);
  w.u8(std::uint8_t(d.game));
  w.i32(d.layer);
  w.u32(d.dim);
  w.u64(d.rows());
  w.u64(d.model_hash);
  for (float v : d.data) w.f32(v);
  for (const auto& p : d.prov) {
    w.u32(p.game_id);
    w.u32(p.token_pos);
  }
  detail::write_file(path, w.buf);
}

inline ActivationDataset read_dataset(const std::string& path) {
  auto buf = detail::read_file(path);
  detail::Reader r{buf.data(), buf.size()};
  detail::check_magic(r, kActsMagic);
  require(r.u32() == 1, ErrorKind::Format, "unsupported dataset version");
  ActivationDataset d;
  d.game = GameKind(r.u8());
  d.layer = r.i32();
  d.dim = r.u32();
  std::uint64_t rows = r.u64();
  d.model_hash = r.u64();
  std::size_t total = std::size_t(rows) * d.dim;
  r.need(total * 4 + std::size_t(rows) * 8);
  d.data.resize(total);
  for (std::size_t i = 0; i < total; ++i) d.data[i] = r.f32();
  d.prov.resize(std::size_t(rows));
  for (auto& p : d.prov) {
    p.game_id = r.u32();
    p.token_pos = r.u32();
  }
  r.done();
  return d;
}

// ---------------------------------------------------------------------------
// Packed binary label rows, aligned 1:1 with an activation dataset.

struct LabelData {
  GameKind game = GameKind::Synthetic;
  std::uint64_t catalog_hash = 0;
  BitRows rows;
};

constexpr char kLabelMagic[9] = "BSLBLS01";

inline void write_labels(const std::string& path, const LabelData& l) {
  detail::Writer w;
  w.bytes(kLabelMagic, 8);
  w.u32(1);
  w.u8(std::uint8_t(l.game));
  w.u64(l.catalog_hash);
  w.u64(l.rows.rows());
  w.u32(std::uint32_t(l.rows.bits()));
  std::size_t row_bytes = (l.rows.bits() + 7) / 8;
  for (std::size_t r = 0; r < l.rows.rows(); ++r) {
    for (std::size_t byte = 0; byte < row_bytes; ++byte) {
      unsigned char v = 0;
      for (int bit = 0; bit < 8; ++bit) {
        std::size_t idx = byte * 8 + std::size_t(bit);
        if (idx < l.rows.bits() && l.rows.get(r, idx)) v |= (1u << bit);
      }
      w.u8(v);
    }
  }
  detail::write_file(path, w.buf);
}

inline LabelData read_labels(const std::string& path) {
  auto buf = detail::read_file(path);
  detail::Reader r{buf.data(), buf.size()};
  detail::check_magic(r, kLabelMagic);
  require(r.u32() == 1, ErrorKind::Format, "unsupported label-file version");
  LabelData l;
  l.game = GameKind(r.u8());
  l.catalog_hash = r.u64();
  std::uint64_t rows = r.u64();
  std::uint32_t bits = r.u32();
  l.rows = BitRows(std::size_t(rows), std::size_t(bits));
  std::size_t row_bytes = (bits + 7) / 8;
  for (std::size_t row = 0; row < rows; ++row) {
    for (std::size_t byte = 0; byte < row_bytes; ++byte) {
      std::uint8_t v = r.u8();
      for (int bit = 0; bit < 8; ++bit) {
        std::size_t idx = byte * 8 + std::size_t(bit);
        if (idx < bits && (v & (1u << bit))) l.rows.set(row, idx);
      }
    }
  }
  r.done();
  return l;
}

// ---------------------------------------------------------------------------
// Train/test splits over game ids.

struct SplitManifest {
  std::uint64_t seed = 0;
  std::vector<std::uint32_t> train_ids;
  std::vector<std::uint32_t> test_ids;

  bool disjoint() const {
    std::vector<std::uint32_t> a = train_ids, b = test_ids;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::vector<std::uint32_t> inter;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(inter));
    return inter.empty();
  }
};

// Seeded shuffle of [0, game_count) then partition; deterministic.
inline SplitManifest split_games(std::size_t game_count, std::uint64_t seed,
                                 std::size_t n_train, std::size_t n_test) {
  require(n_train + n_test <= game_count, ErrorKind::Data,
          "split sizes exceed corpus: need " + std::to_string(n_train + n_test) + ", have " +
              std::to_string(game_count));
  std::vector<std::uint32_t> ids(game_count);
  for (std::size_t i = 0; i < game_count; ++i) ids[i] = std::uint32_t(i);
  std::mt19937_64 rng(seed);
  std::shuffle(ids.begin(), ids.end(), rng);
  SplitManifest m;
  m.seed = seed;
  m.train_ids.assign(ids.begin(), ids.begin() + long(n_train));
  m.test_ids.assign(ids.begin() + long(n_train), ids.begin() + long(n_train + n_test));
  return m;
}

inline void save_manifest(const std::string& path, const SplitManifest& m) {
  nlohmann::json j;
  j["seed"] = m.seed;
  j["train"] = m.train_ids;
  j["test"] = m.test_ids;
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorKind::Format, "cannot open for writing: " + path);
  f << j.dump(2) << "\n";
}

inline SplitManifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorKind::Format, "cannot open: " + path);
  nlohmann::json j;
  try {
    f >> j;
  } catch (const std::exception& e) {
    fail(ErrorKind::Format, std::string("bad manifest JSON: ") + e.what());
  }
  SplitManifest m;
  m.seed = j.at("seed").get<std::uint64_t>();
  m.train_ids = j.at("train").get<std::vector<std::uint32_t>>();
  m.test_ids = j.at("test").get<std::vector<std::uint32_t>>();
  return m;
}

// ---------------------------------------------------------------------------
// Text corpora: one game per line.

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream f(path);
  require(f.good(), ErrorKind::Format, "cannot open: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), ErrorKind::Format, "cannot open for writing: " + path);
  for (const std::string& l : lines) f << l << "\n";
  require(f.good(), ErrorKind::Format, "write failed: " + path);
}

}  // namespace boardsae::io
