#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "idstyle/autodiff.hpp"
#include "idstyle/rng.hpp"
#include "idstyle/types.hpp"

namespace idstyle {

class WorldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct WorldConfig {
  int layers = 6;          // L
  int dim = 32;            // d
  int attributes = 4;      // M
  int image_dim = 256;     // P_img
  int identity_dim = 16;   // q
  /// Per-layer weights; empty selects the decaying default 1/(1+i).
  std::vector<double> layer_weights;
  /// Nonzeros per planted direction; nullopt means dense.
  std::optional<int> planted_sparsity;
  std::uint64_t seed = 7;

  /// Resolved layer weights (default profile when none were given).
  Matrix rho() const;
  /// Throws WorldError on an invalid configuration.
  void validate() const;
};

/// Frozen linear stand-in for a generator, attribute classifier and identity
/// embedder, with planted per-attribute directions the identity cannot see.
struct SyntheticWorld {
  WorldConfig config;
  Matrix rho;         // 1×L layer weights
  Matrix mixing;      // A: P_img×d
  Matrix heads;       // C: M×P_img, unit rows
  Matrix biases;      // 1×M
  Matrix identity;    // Q: q×P_img, unit rows orthogonal to every A·u_m
  Matrix planted;     // U: M×d, unit rows

  /// x = A · Σ_i ρ_i w^i, as a 1×P_img row.
  Matrix generate(const Matrix& latent) const;
  /// logits = C x + b, as a 1×M row.
  Matrix classify(const Matrix& image) const;
  /// ψ = Q x, as a 1×q row.
  Matrix identify(const Matrix& image) const;
  /// sign(logits) with 0 mapped to +1.
  std::vector<int> annotate(const Matrix& latent) const;

  /// Style-mixing W⁺ sample: rows copy one of two standard-normal codes.
  Matrix sample_wplus(Rng& rng) const;
};

SyntheticWorld build_world(const WorldConfig& config);

/// Constant leaves of a world bound into one graph, so repeated calls within a
/// training step share them. Instantiated for double and long double.
template <typename Scalar>
struct BasicWorldGraph {
  using V = ad::Var<Scalar>;

  BasicWorldGraph(ad::Graph<Scalar>& graph, const SyntheticWorld& world);

  // The world is linear, so the image never needs to be materialized:
  // classify(generate(w)) = (ρw)(CA)ᵀ + b and identify(generate(w)) = (ρw)(QA)ᵀ.
  V pool(V latent) const { return matmul(rho, latent); }
  V classify_pooled(V pooled) const { return matmul(pooled, logit_map_t) + biases; }
  V identify_pooled(V pooled) const { return matmul(pooled, identity_map_t); }

  ad::Graph<Scalar>* graph;
  V rho;             // 1×L
  V logit_map_t;     // d×M, (C·A)ᵀ
  V biases;          // 1×M
  V identity_map_t;  // d×q, (Q·A)ᵀ
};

extern template struct BasicWorldGraph<double>;
extern template struct BasicWorldGraph<long double>;

using WorldGraph = BasicWorldGraph<double>;

}  // namespace idstyle
