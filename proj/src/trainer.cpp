#include "idstyle/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "idstyle/optimizer.hpp"

namespace idstyle {

std::vector<TrainingSample> sample_batch(const SyntheticWorld& world, int batch_size, TargetMode mode, Rng& rng) {
  std::vector<TrainingSample> batch;
  batch.reserve(static_cast<std::size_t>(batch_size));
  for (int b = 0; b < batch_size; ++b) {
    TrainingSample s;
    s.latent = world.sample_wplus(rng);
    s.labels = world.annotate(s.latent);
    s.targets.resize(s.labels.size());
    for (std::size_t m = 0; m < s.labels.size(); ++m) {
      s.targets[m] = mode == TargetMode::Toggle ? -s.labels[m] : (rng.below(2) == 0 ? -1 : 1);
    }
    batch.push_back(std::move(s));
  }
  return batch;
}

template <typename S>
LossTerms<ad::Var<S>> batch_objective(const BasicEditorGraph<S>& editor, const BasicWorldGraph<S>& world,
                                      const std::vector<TrainingSample>& batch) {
  using V = ad::Var<S>;
  ad::Graph<S>& g = *world.graph;
  LossTerms<V> sum_terms;
  bool first = true;
  auto accumulate = [&first](V& into, V term) { into = first ? term : into + term; };

  for (const TrainingSample& sample : batch) {
    const auto attributes = static_cast<int>(sample.targets.size());
    const V w = g.constant(sample.latent.cast<S>());
    const V lft = editor.iaip(w);
    const V original_identity = world.identify_pooled(world.pool(w));

    std::vector<V> edited;
    V classification;
    V identity;
    for (int m = 0; m < attributes; ++m) {
      const int attr = sample.targets[static_cast<std::size_t>(m)];
      const V w_hat = w + editor.increment(lft, m, attr);
      edited.push_back(w_hat);

      Matrix bits(1, attributes);
      for (int k = 0; k < attributes; ++k) bits(0, k) = (sample.labels[static_cast<std::size_t>(k)] + 1) / 2;
      bits(0, m) = (attr + 1) / 2;

      const V pooled = world.pool(w_hat);
      const V cls = classification_loss(world.classify_pooled(pooled), bits);
      const V id = identity_loss(original_identity, world.identify_pooled(pooled));
      classification = m == 0 ? cls : classification + cls;
      identity = m == 0 ? id : identity + id;
    }
    accumulate(sum_terms.classification, classification);
    accumulate(sum_terms.identity, identity);
    accumulate(sum_terms.neighborhood, neighborhood_loss(edited, w));
    accumulate(sum_terms.direction, direction_loss(lft, editor.directions()));
    first = false;
  }

  const S inv = S(1) / static_cast<S>(batch.size());
  LossTerms<V> terms;
  terms.classification = inv * sum_terms.classification;
  terms.neighborhood = inv * sum_terms.neighborhood;
  terms.direction = inv * sum_terms.direction;
  terms.identity = inv * sum_terms.identity;
  terms.sparsity = sparsity_loss(editor.directions());
  return terms;
}

template LossTerms<ad::Var<double>> batch_objective<double>(const BasicEditorGraph<double>&,
                                                            const BasicWorldGraph<double>&,
                                                            const std::vector<TrainingSample>&);
template LossTerms<ad::Var<long double>> batch_objective<long double>(const BasicEditorGraph<long double>&,
                                                                      const BasicWorldGraph<long double>&,
                                                                      const std::vector<TrainingSample>&);

namespace {

LossReport report_of(const LossTerms<Var>& terms, const Var& total) {
  LossReport r;
  r.terms.classification = terms.classification.value()(0, 0);
  r.terms.neighborhood = terms.neighborhood.value()(0, 0);
  r.terms.sparsity = terms.sparsity.value()(0, 0);
  r.terms.direction = terms.direction.value()(0, 0);
  r.terms.identity = terms.identity.value()(0, 0);
  r.total = total.value()(0, 0);
  return r;
}

Checkpoint make_checkpoint(const TrainConfig& config, const SyntheticWorld& world, const EditorParams& params,
                           const AdaBeliefState& state, const std::vector<LossReport>& history) {
  Checkpoint c;
  c.config = config;
  c.world = world;
  c.params = params;
  c.optimizer = state;
  if (!history.empty()) {
    const LossReport& last = history.back();
    c.metrics = {{"final_loss", last.total},
                 {"final_classification", last.terms.classification},
                 {"final_neighborhood", last.terms.neighborhood},
                 {"final_sparsity", last.terms.sparsity},
                 {"final_direction", last.terms.direction},
                 {"final_identity", last.terms.identity},
                 {"steps", static_cast<double>(history.size())}};
  }
  return c;
}

}  // namespace

ObjectiveEvaluation evaluate_objective(const EditorParams& params, const EditorOptions& options,
                                       const SyntheticWorld& world, const std::vector<TrainingSample>& batch,
                                       const LossWeights& weights) {
  Graph g;
  const EditorGraph editor(g, params, options, true);
  const WorldGraph wg(g, world);
  const LossTerms<Var> terms = batch_objective(editor, wg, batch);
  const Var total = total_loss(terms, weights);
  g.backward(total);

  ObjectiveEvaluation out;
  out.report = report_of(terms, total);
  for (std::size_t k = 0; k < out.gradients.size(); ++k) out.gradients[k] = editor.leaves()[k].grad();
  return out;
}

TrainResult train(const TrainConfig& config, const StepObserver& observer) {
  config.validate();
  const SyntheticWorld world = build_world(config.world);
  const EditorOptions options = config.editor_options();
  const LossWeights weights = config.effective_weights();
  const AdaBeliefHyper hyper{config.learning_rate, config.beta1, config.beta2, config.eps};

  Rng init_rng = Rng::stream(config.seed, Stream::Init);
  EditorParams params = init_params(config.dims(), init_rng);
  const auto tensors = params.tensors();
  AdaBeliefState state = AdaBeliefState::zeros_like(params.tensors());
  Rng data_rng = Rng::stream(config.seed, Stream::Dataset);

  TrainResult result;
  result.history.reserve(static_cast<std::size_t>(config.iterations));
  for (int step = 1; step <= config.iterations; ++step) {
    const auto batch = sample_batch(world, config.batch_size, config.target_mode, data_rng);
    ObjectiveEvaluation eval = evaluate_objective(params, options, world, batch, weights);
    if (!std::isfinite(eval.report.total)) {
      throw TrainingDiverged("training diverged at step " + std::to_string(step) + ": total loss is not finite",
                             make_checkpoint(config, world, params, state, result.history));
    }
    if (config.clip_grad_norm > 0.0) {
      double sq = 0.0;
      for (const Matrix& gk : eval.gradients) sq += gk.squaredNorm();
      const double norm = std::sqrt(sq);
      if (norm > config.clip_grad_norm) {
        for (Matrix& gk : eval.gradients) gk *= config.clip_grad_norm / norm;
      }
    }
    try {
      adabelief_step(tensors, eval.gradients, state, hyper);
    } catch (const NonFiniteGradient& e) {
      throw TrainingDiverged(e.what(), make_checkpoint(config, world, params, state, result.history));
    }
    result.history.push_back(eval.report);
    if (observer) observer(step, eval.report);
  }
  result.checkpoint = make_checkpoint(config, world, params, state, result.history);
  return result;
}

GradCheckSummary gradcheck_objective(const TrainConfig& config, int configurations, double eps, int batch_size) {
  config.validate();
  const SyntheticWorld world = build_world(config.world);
  const EditorOptions options = config.editor_options();
  const LossWeights weights = config.effective_weights();
  constexpr int kMaxRedraws = 50;

  GradCheckSummary summary;
  std::uint64_t draw = 0;
  for (int c = 0; c < configurations; ++c) {
    for (int attempt = 0;; ++attempt) {
      Rng rng = Rng::stream(config.seed, Stream::GradCheck, draw++);
      EditorParams params = init_params(config.dims(), rng);
      // Nonzero biases and gates so every adjoint is exercised.
      for (Matrix* t : {&params.b1, &params.bc, &params.b2, &params.embeddings}) {
        for (Eigen::Index i = 0; i < t->size(); ++i) t->data()[i] = 0.1 * rng.normal();
      }
      const auto batch = sample_batch(world, batch_size, config.target_mode, rng);

      std::vector<Matrix> point;
      for (const Matrix* t : params.tensors()) point.push_back(*t);
      const auto objective = [&]<typename S>(ad::Graph<S>& g, const std::vector<ad::Var<S>>& l) {
        const BasicEditorGraph<S> editor(g, {l[0], l[1], l[2], l[3], l[4], l[5], l[6], l[7]}, options);
        const BasicWorldGraph<S> wg(g, world);
        return total_loss(batch_objective(editor, wg, batch), weights);
      };
      const ad::ScalarFunction<double> analytic = objective;
      const ad::ScalarFunction<long double> oracle = objective;
      const auto r = ad::grad_check(analytic, oracle, point, eps);
      if (r.kink_margin < 10 * eps) {
        ++summary.rejected_points;
        if (attempt >= kMaxRedraws) throw std::runtime_error("gradcheck: every drawn point lies near a kink");
        continue;
      }
      summary.per_configuration.push_back(r.max_relative_error);
      summary.max_relative_error = std::max(summary.max_relative_error, r.max_relative_error);
      ++summary.configurations;
      break;
    }
  }
  return summary;
}

}  // namespace idstyle
