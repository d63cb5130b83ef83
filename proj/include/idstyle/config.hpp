#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "idstyle/editor.hpp"
#include "idstyle/objectives.hpp"
#include "idstyle/world.hpp"

namespace idstyle {

/// How per-sample training targets are drawn.
enum class TargetMode {
  Toggle,  // attr_m = −label_m
  Random,  // attr_m uniform in {−1, +1}
};

/// Component switches for ablation runs.
struct Ablations {
  bool disable_direction_loss = false;
  bool disable_sparsity_loss = false;
  bool disable_cfc = false;
  bool disable_input_pe = false;
  bool disable_output_embedding = false;
};

struct TrainConfig {
  WorldConfig world;
  std::vector<std::string> attribute_names;
  LossWeights weights;
  double learning_rate = 1e-3;
  double beta1 = 0.98;
  double beta2 = 0.98;
  double eps = 1e-8;
  int batch_size = 8;
  int iterations = 5000;
  std::uint64_t seed = 7;
  Ablations ablations;
  DirectionNorm direction_norm = DirectionNorm::L2;
  TargetMode target_mode = TargetMode::Toggle;
  /// Global gradient-norm clip; 0 disables clipping.
  double clip_grad_norm = 0.0;

  /// Desk-scale defaults (L=6, d=32, M=4, sparse planted directions).
  static TrainConfig desk();

  EditorDims dims() const { return {world.layers, world.dim, world.attributes}; }
  EditorOptions editor_options() const;
  /// Loss weights after applying the loss ablation switches.
  LossWeights effective_weights() const;
  /// Index of an attribute name; throws ConfigError when unknown.
  int attribute_index(std::string_view name) const;
  /// Throws ConfigError on any violated constraint.
  void validate() const;
};

/// Parses flat `key = value` text. Blank lines and `#` comments are ignored;
/// unknown or repeated keys are rejected.
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);

/// Canonical text form; `parse_config(to_text(c))` reproduces `c` exactly.
std::string to_text(const TrainConfig& config);

}  // namespace idstyle
