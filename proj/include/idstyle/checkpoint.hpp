#pragma once

// Binary tensor-record container shared by checkpoints and latent files.
//
// Layout (all integers and payloads little-endian):
//   magic "IDSE" | u32 version | u64 header length | header bytes (UTF-8 text)
//   u32 record count
//   per record: u32 name length | name bytes | u32 rank | u64 dims[rank]
//               | f64 payload[prod(dims)], row-major

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "idstyle/config.hpp"
#include "idstyle/editor.hpp"
#include "idstyle/optimizer.hpp"
#include "idstyle/world.hpp"

namespace idstyle {

inline constexpr char kMagic[4] = {'I', 'D', 'S', 'E'};
inline constexpr std::uint32_t kFormatVersion = 1;

enum class CheckpointErrc {
  Io = 1,
  NotACheckpoint,
  UnsupportedVersion,
  CorruptRecord,
  MissingRecord,
  BadShape,
};

class CheckpointError : public std::runtime_error {
 public:
  CheckpointError(CheckpointErrc code, const std::string& what) : std::runtime_error(what), code_(code) {}
  CheckpointErrc code() const { return code_; }

 private:
  CheckpointErrc code_;
};

struct TensorRecord {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;

  static TensorRecord from_matrix(std::string name, const Matrix& m);
  static TensorRecord from_scalar(std::string name, double v);
  /// Rank-2 view; throws CheckpointError(BadShape) for other ranks.
  Matrix to_matrix() const;
};

struct RecordFile {
  std::string header;
  std::vector<TensorRecord> records;

  const TensorRecord* find(std::string_view name) const;
  /// Throws CheckpointError(MissingRecord) when absent.
  const TensorRecord& at(std::string_view name) const;
};

std::string encode(const RecordFile& file);
RecordFile decode(std::string_view bytes);

void write_record_file(const std::filesystem::path& path, const RecordFile& file);
RecordFile read_record_file(const std::filesystem::path& path);

struct Checkpoint {
  TrainConfig config;
  SyntheticWorld world;
  EditorParams params;
  std::optional<AdaBeliefState> optimizer;
  /// Named scalar metrics, in insertion order.
  std::vector<std::pair<std::string, double>> metrics;

  Editor editor() const { return Editor(params, config.editor_options()); }
  std::optional<double> metric(std::string_view name) const;
};

RecordFile to_record_file(const Checkpoint& ckpt);
Checkpoint from_record_file(const RecordFile& file);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Latent files hold a single rank-2 record named "latent".
void write_latent(const std::filesystem::path& path, const Matrix& latent);
Matrix read_latent(const std::filesystem::path& path);

}  // namespace idstyle
