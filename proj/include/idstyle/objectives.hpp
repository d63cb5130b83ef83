#pragma once

#include <vector>
#include <stdexcept>

#include "idstyle/types.hpp"

namespace idstyle {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct LossWeights {
  double classification = 2.0;
  double neighborhood = 0.3;
  double sparsity = 1.0;
  double direction = 1.0;
  double identity = 5.0;

  /// Throws ConfigError when any weight is negative or not finite.
  void validate() const;
};

/// One value per loss term; `T` is a graph node during training and a
/// double in reports.
template <typename T>
struct LossTerms {
  T classification{};
  T neighborhood{};
  T sparsity{};
  T direction{};
  T identity{};
};

struct LossReport {
  LossTerms<double> terms;
  double total = 0;
};

// Graph-side terms, instantiated for double and long double.

/// Σ_m ‖P_m‖₁ over normalized 1×d directions.
template <typename S>
ad::Var<S> sparsity_loss(const std::vector<ad::Var<S>>& directions);

/// Σ_m Σ_i (1 − cos(l_ft^i ⊙ P_m, P_m)).
template <typename S>
ad::Var<S> direction_loss(ad::Var<S> lft, const std::vector<ad::Var<S>>& directions);

/// Σ_m ‖ŵ_m − w_org‖_F.
template <typename S>
ad::Var<S> neighborhood_loss(const std::vector<ad::Var<S>>& edited, ad::Var<S> original);

/// Mean over attributes of BCE-with-logits; targets are bits in {0, 1}.
template <typename S>
ad::Var<S> classification_loss(ad::Var<S> logits, const Matrix& target_bits);

/// 1 − cos(ψ_orig, ψ_edit).
template <typename S>
ad::Var<S> identity_loss(ad::Var<S> original_features, ad::Var<S> edited_features);

/// λ-weighted sum. Terms whose weight is exactly 0 are left out of the graph,
/// so they contribute neither value nor gradient.
template <typename S>
ad::Var<S> total_loss(const LossTerms<ad::Var<S>>& terms, const LossWeights& weights);

double total_loss(const LossTerms<double>& terms, const LossWeights& weights);

}  // namespace idstyle
