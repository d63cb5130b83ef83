#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "idstyle/types.hpp"

namespace idstyle {

struct AdaBeliefHyper {
  double learning_rate = 1e-3;
  double beta1 = 0.98;
  double beta2 = 0.98;
  double eps = 1e-8;
};

/// First moment and belief (centred second moment) per parameter tensor.
struct AdaBeliefState {
  std::vector<Matrix> m;
  std::vector<Matrix> s;
  std::uint64_t step = 0;

  static AdaBeliefState zeros_like(std::span<const Matrix* const> params);
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One AdaBelief update:
///   m ← β₁m + (1−β₁)g
///   s ← β₂s + (1−β₂)(g−m)² + ε
///   θ ← θ − lr · (m/(1−β₁ᵗ)) / (√(s/(1−β₂ᵗ)) + ε)
/// Gradients are checked before anything is touched; a non-finite entry
/// throws NonFiniteGradient and leaves params and state unchanged.
void adabelief_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdaBeliefState& state,
                    const AdaBeliefHyper& hyper);

}  // namespace idstyle
