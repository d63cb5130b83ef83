#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "idstyle/checkpoint.hpp"

namespace idstyle {

/// Post-processing applied to every realized edit increment.
struct EditTransform {
  /// Entries kept per row by top-k filtering; a negative value keeps all.
  int k = -1;
  /// Scale applied to the signed, gated increment before it is added.
  double intensity = 1.0;
};

struct AttributeAccuracy {
  std::string name;
  int to_positive = 0;          // edits requesting +1
  int to_positive_correct = 0;
  int to_negative = 0;          // edits requesting −1
  int to_negative_correct = 0;
  double identity_similarity = 0;    // mean over this attribute's edits
  double neighborhood_distance = 0;

  double accuracy_positive() const;
  double accuracy_negative() const;
  double accuracy() const;
};

struct EvalReport {
  std::vector<AttributeAccuracy> attributes;
  double mean_accuracy = 0;          // mACC analog
  double identity_similarity = 0;    // FRS analog
  double neighborhood_distance = 0;  // mean ‖ŵ − w‖_F
  int samples = 0;
  std::uint64_t seed = 0;
};

struct SweepRow {
  int k = 0;
  double intensity = 1.0;
  double accuracy = 0;
  double identity_similarity = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
};

/// a·b / √((a·a)(b·b)); 1 when both vectors are zero, 0 when exactly one is.
double cosine_similarity(const Matrix& a, const Matrix& b);

/// Identity-feature cosine between an original latent and its edit.
double identity_similarity(const SyntheticWorld& world, const Matrix& original, const Matrix& edited);

/// Toggle-protocol evaluation: each held-out sample is edited once per
/// attribute towards the opposite of its annotated label.
EvalReport evaluate(const Checkpoint& ckpt, int n_samples, std::uint64_t seed, const EditTransform& transform = {});

/// Pairwise angles between normalized directions, in degrees.
Matrix angle_matrix(const Matrix& directions);
Matrix angle_matrix(const Checkpoint& ckpt);

/// Keeps the k largest-|value| entries of each row; ties go to the lower column.
Matrix topk_filter(const Matrix& delta, int k);

/// Evaluates every (k, intensity) pair; rows sorted by k, then intensity.
SweepResult sweep(const Checkpoint& ckpt, std::span<const int> ks, std::span<const double> intensities,
                  int n_samples, std::uint64_t seed);
SweepResult topk_sweep(const Checkpoint& ckpt, std::span<const int> ks, int n_samples, std::uint64_t seed);
SweepResult intensity_sweep(const Checkpoint& ckpt, int k, std::span<const double> intensities, int n_samples,
                            std::uint64_t seed);

/// Mean L1/L2 ratio of the rows of `directions` (1 for one-hot, √d for flat).
double mean_l1_l2_ratio(const Matrix& directions);

// CSV emission: header row, one record per line, '.' decimal separator.
void write_eval_csv(std::ostream& out, const EvalReport& report);
void write_angles_csv(std::ostream& out, const Matrix& angles, std::span<const std::string> names);
void write_sweep_csv(std::ostream& out, const SweepResult& result);

/// Shortest round-trip decimal form, independent of the global locale.
std::string format_number(double x);

}  // namespace idstyle
