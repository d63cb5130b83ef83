#include "idstyle/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace idstyle {

namespace {

constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool has(std::size_t n) const { return bytes_.size() - pos_ >= n; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string_view take(std::size_t n) {
    const auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

[[noreturn]] void corrupt(const std::string& what) {
  throw CheckpointError(CheckpointErrc::CorruptRecord, "corrupt record " + what);
}

Matrix expect_shape(const RecordFile& file, std::string_view name, Eigen::Index rows, Eigen::Index cols) {
  Matrix m = file.at(name).to_matrix();
  if (m.rows() != rows || m.cols() != cols) {
    throw CheckpointError(CheckpointErrc::BadShape, "record '" + std::string(name) + "' has shape (" +
                                                        std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                                                        "), expected (" + std::to_string(rows) + "x" +
                                                        std::to_string(cols) + ")");
  }
  return m;
}

}  // namespace

TensorRecord TensorRecord::from_matrix(std::string name, const Matrix& m) {
  TensorRecord r;
  r.name = std::move(name);
  r.dims = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  r.data.assign(m.data(), m.data() + m.size());
  return r;
}

TensorRecord TensorRecord::from_scalar(std::string name, double v) {
  TensorRecord r;
  r.name = std::move(name);
  r.data = {v};
  return r;
}

Matrix TensorRecord::to_matrix() const {
  if (dims.size() != 2) {
    throw CheckpointError(CheckpointErrc::BadShape,
                          "record '" + name + "' has rank " + std::to_string(dims.size()) + ", expected rank 2");
  }
  Matrix m(static_cast<Eigen::Index>(dims[0]), static_cast<Eigen::Index>(dims[1]));
  std::copy(data.begin(), data.end(), m.data());
  return m;
}

const TensorRecord* RecordFile::find(std::string_view name) const {
  for (const auto& r : records) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

const TensorRecord& RecordFile::at(std::string_view name) const {
  if (const TensorRecord* r = find(name)) return *r;
  throw CheckpointError(CheckpointErrc::MissingRecord, "missing record '" + std::string(name) + "'");
}

std::string encode(const RecordFile& file) {
  std::string out(kMagic, sizeof(kMagic));
  put_u32(out, kFormatVersion);
  put_u64(out, file.header.size());
  out += file.header;
  put_u32(out, static_cast<std::uint32_t>(file.records.size()));
  for (const auto& r : file.records) {
    put_u32(out, static_cast<std::uint32_t>(r.name.size()));
    out += r.name;
    put_u32(out, static_cast<std::uint32_t>(r.dims.size()));
    for (auto d : r.dims) put_u64(out, d);
    for (double v : r.data) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

RecordFile decode(std::string_view bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CheckpointError(CheckpointErrc::NotACheckpoint, "not a checkpoint (bad magic)");
  }
  Reader in(bytes);
  in.take(sizeof(kMagic));
  if (!in.has(4)) corrupt("header: truncated version");
  const std::uint32_t version = in.u32();
  if (version != kFormatVersion) {
    throw CheckpointError(CheckpointErrc::UnsupportedVersion,
                          "unsupported format version " + std::to_string(version) + " (expected " +
                              std::to_string(kFormatVersion) + ")");
  }
  RecordFile file;
  if (!in.has(8)) corrupt("header: truncated length");
  const std::uint64_t header_len = in.u64();
  if (!in.has(header_len)) corrupt("header: truncated text");
  file.header = std::string(in.take(header_len));
  if (!in.has(4)) corrupt("header: truncated record count");
  const std::uint32_t count = in.u32();

  for (std::uint32_t k = 0; k < count; ++k) {
    TensorRecord r;
    const std::string where = "#" + std::to_string(k);
    if (!in.has(4)) corrupt(where + ": truncated name length");
    const std::uint32_t name_len = in.u32();
    if (!in.has(name_len)) corrupt(where + ": truncated name");
    r.name = std::string(in.take(name_len));
    const std::string label = "'" + r.name + "'";
    if (!in.has(4)) corrupt(label + ": truncated rank");
    const std::uint32_t rank = in.u32();
    if (rank > kMaxRank) corrupt(label + ": rank " + std::to_string(rank) + " exceeds " + std::to_string(kMaxRank));
    if (!in.has(8ULL * rank)) corrupt(label + ": truncated dims");
    std::uint64_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      r.dims.push_back(in.u64());
      if (r.dims.back() != 0 && n > in.remaining() / r.dims.back()) corrupt(label + ": truncated payload");
      n *= r.dims.back();
    }
    if (!in.has(8 * n)) corrupt(label + ": truncated payload");
    r.data.resize(n);
    for (auto& v : r.data) v = std::bit_cast<double>(in.u64());
    file.records.push_back(std::move(r));
  }
  if (in.remaining() != 0) corrupt("trailer: " + std::to_string(in.remaining()) + " unexpected trailing bytes");
  return file;
}

void write_record_file(const std::filesystem::path& path, const RecordFile& file) {
  const std::string bytes = encode(file);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError(CheckpointErrc::Io, "cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw CheckpointError(CheckpointErrc::Io, "failed writing " + path.string());
}

RecordFile read_record_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError(CheckpointErrc::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return decode(buf.str());
}

// -- checkpoints -------------------------------------------------------------------

std::optional<double> Checkpoint::metric(std::string_view name) const {
  for (const auto& [k, v] : metrics) {
    if (k == name) return v;
  }
  return std::nullopt;
}

RecordFile to_record_file(const Checkpoint& ckpt) {
  RecordFile f;
  f.header = to_text(ckpt.config);
  const auto& w = ckpt.world;
  f.records.push_back(TensorRecord::from_matrix("world.rho", w.rho));
  f.records.push_back(TensorRecord::from_matrix("world.mixing", w.mixing));
  f.records.push_back(TensorRecord::from_matrix("world.heads", w.heads));
  f.records.push_back(TensorRecord::from_matrix("world.biases", w.biases));
  f.records.push_back(TensorRecord::from_matrix("world.identity", w.identity));
  f.records.push_back(TensorRecord::from_matrix("world.planted", w.planted));
  const auto tensors = ckpt.params.tensors();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    f.records.push_back(TensorRecord::from_matrix(std::string(EditorParams::kNames[k]), *tensors[k]));
  }
  if (ckpt.optimizer) {
    const auto& opt = *ckpt.optimizer;
    f.records.push_back(TensorRecord::from_scalar("adabelief.step", static_cast<double>(opt.step)));
    for (std::size_t k = 0; k < opt.m.size(); ++k) {
      f.records.push_back(TensorRecord::from_matrix("adabelief.m." + std::string(EditorParams::kNames[k]), opt.m[k]));
      f.records.push_back(TensorRecord::from_matrix("adabelief.s." + std::string(EditorParams::kNames[k]), opt.s[k]));
    }
  }
  for (const auto& [name, value] : ckpt.metrics) f.records.push_back(TensorRecord::from_scalar("metrics." + name, value));
  return f;
}

Checkpoint from_record_file(const RecordFile& f) {
  Checkpoint c;
  try {
    c.config = parse_config(f.header);
  } catch (const ConfigError& e) {
    throw CheckpointError(CheckpointErrc::CorruptRecord, std::string("corrupt record header: ") + e.what());
  }
  const auto& wc = c.config.world;
  const int l = wc.layers, d = wc.dim, m = wc.attributes;
  c.world.config = wc;
  c.world.rho = expect_shape(f, "world.rho", 1, l);
  c.world.mixing = expect_shape(f, "world.mixing", wc.image_dim, d);
  c.world.heads = expect_shape(f, "world.heads", m, wc.image_dim);
  c.world.biases = expect_shape(f, "world.biases", 1, m);
  c.world.identity = expect_shape(f, "world.identity", wc.identity_dim, wc.image_dim);
  c.world.planted = expect_shape(f, "world.planted", m, d);

  const EditorParams shapes = zero_params(c.config.dims());
  const auto expected = shapes.tensors();
  const auto tensors = c.params.tensors();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    *tensors[k] = expect_shape(f, EditorParams::kNames[k], expected[k]->rows(), expected[k]->cols());
  }
  if (const TensorRecord* step = f.find("adabelief.step")) {
    AdaBeliefState opt;
    opt.step = static_cast<std::uint64_t>(step->data.at(0));
    for (std::size_t k = 0; k < tensors.size(); ++k) {
      const std::string name(EditorParams::kNames[k]);
      opt.m.push_back(expect_shape(f, "adabelief.m." + name, expected[k]->rows(), expected[k]->cols()));
      opt.s.push_back(expect_shape(f, "adabelief.s." + name, expected[k]->rows(), expected[k]->cols()));
    }
    c.optimizer = std::move(opt);
  }
  for (const auto& r : f.records) {
    if (r.name.starts_with("metrics.")) {
      if (r.data.size() != 1) {
        throw CheckpointError(CheckpointErrc::BadShape, "metric record '" + r.name + "' must hold one value");
      }
      c.metrics.emplace_back(r.name.substr(8), r.data[0]);
    }
  }
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_record_file(path, to_record_file(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return from_record_file(read_record_file(path)); }

void write_latent(const std::filesystem::path& path, const Matrix& latent) {
  RecordFile f;
  f.records.push_back(TensorRecord::from_matrix("latent", latent));
  write_record_file(path, f);
}

Matrix read_latent(const std::filesystem::path& path) {
  const RecordFile f = read_record_file(path);
  return f.at("latent").to_matrix();
}

}  // namespace idstyle
