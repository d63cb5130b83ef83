#pragma once

#include <array>
#include <functional>
#include <stdexcept>
#include <vector>

#include "idstyle/checkpoint.hpp"
#include "idstyle/config.hpp"
#include "idstyle/editor.hpp"
#include "idstyle/objectives.hpp"
#include "idstyle/world.hpp"

namespace idstyle {

/// One training example: a W⁺ code, its annotated labels, and the requested
/// per-attribute edit targets (each in {−1, +1}).
struct TrainingSample {
  Matrix latent;
  std::vector<int> labels;
  std::vector<int> targets;
};

std::vector<TrainingSample> sample_batch(const SyntheticWorld& world, int batch_size, TargetMode mode, Rng& rng);

/// Builds every loss term for a batch: each sample is edited once per
/// attribute; per-sample terms are averaged over the batch. Instantiated for
/// double and long double.
template <typename S>
LossTerms<ad::Var<S>> batch_objective(const BasicEditorGraph<S>& editor, const BasicWorldGraph<S>& world,
                                      const std::vector<TrainingSample>& batch);

/// Value and gradient of the weighted objective at the given parameters.
struct ObjectiveEvaluation {
  LossReport report;
  std::array<Matrix, 8> gradients;
};

ObjectiveEvaluation evaluate_objective(const EditorParams& params, const EditorOptions& options,
                                       const SyntheticWorld& world, const std::vector<TrainingSample>& batch,
                                       const LossWeights& weights);

/// Thrown when the total loss turns non-finite; carries the last parameters
/// that produced a finite loss.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& what, Checkpoint last_good)
      : std::runtime_error(what), last_good_(std::move(last_good)) {}
  const Checkpoint& last_good() const { return last_good_; }

 private:
  Checkpoint last_good_;
};

struct TrainResult {
  Checkpoint checkpoint;
  std::vector<LossReport> history;
};

/// Called after every optimizer step with the 1-based step index.
using StepObserver = std::function<void(int step, const LossReport& report)>;

TrainResult train(const TrainConfig& config, const StepObserver& observer = {});

/// Result of the full finite-difference verification of the objective.
struct GradCheckSummary {
  int configurations = 0;
  int rejected_points = 0;
  double max_relative_error = 0;
  std::vector<double> per_configuration;
};

/// Checks 64-bit analytic gradients of the weighted objective against central
/// differences at `configurations` random parameter/batch points. Points
/// within 10·eps of a ReLU or L1 kink are redrawn. The finite differences are
/// evaluated in long double so their cancellation noise stays well below the
/// smallest gradient entries.
GradCheckSummary gradcheck_objective(const TrainConfig& config, int configurations, double eps, int batch_size);

}  // namespace idstyle
