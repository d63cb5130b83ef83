#include "idstyle/objectives.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace idstyle {

void LossWeights::validate() const {
  const std::pair<const char*, double> all[] = {{"lambda_class", classification},
                                                {"lambda_nb", neighborhood},
                                                {"lambda_sparsity", sparsity},
                                                {"lambda_direction", direction},
                                                {"lambda_id", identity}};
  for (const auto& [name, value] : all) {
    if (!std::isfinite(value) || value < 0.0) {
      throw ConfigError(std::string(name) + " must be a nonnegative number, got " + std::to_string(value));
    }
  }
}

template <typename S>
ad::Var<S> sparsity_loss(const std::vector<ad::Var<S>>& directions) {
  ad::Var<S> total = l1_norm(directions.front());
  for (std::size_t k = 1; k < directions.size(); ++k) total = total + l1_norm(directions[k]);
  return total;
}

template <typename S>
ad::Var<S> direction_loss(ad::Var<S> lft, const std::vector<ad::Var<S>>& directions) {
  const Eigen::Index layers = lft.rows();
  ad::Var<S> total;
  bool first = true;
  for (const auto& p : directions) {
    const ad::Var<S> tiled = tile_rows(p, layers);
    const ad::Var<S> term = sum(S(1) - row_cosine(lft * tiled, tiled));
    total = first ? term : total + term;
    first = false;
  }
  return total;
}

template <typename S>
ad::Var<S> neighborhood_loss(const std::vector<ad::Var<S>>& edited, ad::Var<S> original) {
  ad::Var<S> total = l2_norm(edited.front() - original);
  for (std::size_t k = 1; k < edited.size(); ++k) total = total + l2_norm(edited[k] - original);
  return total;
}

template <typename S>
ad::Var<S> classification_loss(ad::Var<S> logits, const Matrix& target_bits) {
  return bce_with_logits(logits, ad::Tensor<S>(target_bits.cast<S>()));
}

template <typename S>
ad::Var<S> identity_loss(ad::Var<S> original_features, ad::Var<S> edited_features) {
  return S(1) - cosine(original_features, edited_features);
}

template <typename S>
ad::Var<S> total_loss(const LossTerms<ad::Var<S>>& terms, const LossWeights& weights) {
  const std::pair<double, ad::Var<S>> parts[] = {{weights.classification, terms.classification},
                                                 {weights.neighborhood, terms.neighborhood},
                                                 {weights.sparsity, terms.sparsity},
                                                 {weights.direction, terms.direction},
                                                 {weights.identity, terms.identity}};
  ad::Var<S> total;
  bool any = false;
  for (const auto& [lambda, term] : parts) {
    if (lambda == 0.0) continue;
    const ad::Var<S> scaled = static_cast<S>(lambda) * term;
    total = any ? total + scaled : scaled;
    any = true;
  }
  // All weights zero: a zero scalar that still lives in the graph.
  if (!any) total = S(0) * terms.classification;
  return total;
}

#define IDSTYLE_INSTANTIATE_OBJECTIVES(S)                                                            \
  template ad::Var<S> sparsity_loss<S>(const std::vector<ad::Var<S>>&);                                 \
  template ad::Var<S> direction_loss<S>(ad::Var<S>, const std::vector<ad::Var<S>>&);                    \
  template ad::Var<S> neighborhood_loss<S>(const std::vector<ad::Var<S>>&, ad::Var<S>);                 \
  template ad::Var<S> classification_loss<S>(ad::Var<S>, const Matrix&);                             \
  template ad::Var<S> identity_loss<S>(ad::Var<S>, ad::Var<S>);                                      \
  template ad::Var<S> total_loss<S>(const LossTerms<ad::Var<S>>&, const LossWeights&);

IDSTYLE_INSTANTIATE_OBJECTIVES(double)
IDSTYLE_INSTANTIATE_OBJECTIVES(long double)

#undef IDSTYLE_INSTANTIATE_OBJECTIVES

double total_loss(const LossTerms<double>& terms, const LossWeights& weights) {
  double total = 0.0;
  total += weights.classification * terms.classification;
  total += weights.neighborhood * terms.neighborhood;
  total += weights.sparsity * terms.sparsity;
  total += weights.direction * terms.direction;
  total += weights.identity * terms.identity;
  return total;
}

}  // namespace idstyle
