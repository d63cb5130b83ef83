#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "idstyle/rng.hpp"
#include "idstyle/types.hpp"

namespace idstyle {

/// How raw global directions are normalized before use.
enum class DirectionNorm { L2, L1 };

struct EditorDims {
  int layers = 6;      // L
  int dim = 32;        // d
  int attributes = 4;  // M
};

struct EditorOptions {
  DirectionNorm direction_norm = DirectionNorm::L2;
  bool use_cfc = true;           // column-wise mixing layer
  bool use_input_pe = true;      // positional encoding concatenated to the input
  bool use_output_gate = true;   // per-layer sigmoid gate
};

/// Full trainable state of the editor.
struct EditorParams {
  Matrix directions;  // M×d raw global directions
  Matrix embeddings;  // M×L layer-gate logits
  Matrix w1;          // 2d×d first row-wise layer
  Matrix b1;          // 1×d
  Matrix wc;          // L×L column-wise layer
  Matrix bc;          // 1×L
  Matrix w2;          // d×d second row-wise layer
  Matrix b2;          // 1×d

  static constexpr std::array<std::string_view, 8> kNames = {
      "editor.directions", "editor.embeddings", "iaip.w1", "iaip.b1",
      "iaip.wc",           "iaip.bc",           "iaip.w2", "iaip.b2"};

  std::array<Matrix*, 8> tensors() { return {&directions, &embeddings, &w1, &b1, &wc, &bc, &w2, &b2}; }
  std::array<const Matrix*, 8> tensors() const {
    return {&directions, &embeddings, &w1, &b1, &wc, &bc, &w2, &b2};
  }

  EditorDims dims() const {
    return {static_cast<int>(embeddings.cols()), static_cast<int>(directions.cols()),
            static_cast<int>(directions.rows())};
  }
  std::size_t scalar_count() const;
};

/// Trainable scalars for the given dimensions, biases included.
std::size_t parameter_count(const EditorDims& dims);

/// Zero shapes with all entries 0.
EditorParams zero_params(const EditorDims& dims);

/// Glorot-uniform weights, zero biases, N(0, 1/d) directions, zero embeddings.
EditorParams init_params(const EditorDims& dims, Rng& rng);

/// Interleaved sinusoidal encoding, base 10000. Throws on odd `dim`.
Matrix positional_encoding(int layers, int dim);

/// Elementwise pick of the largest-magnitude value across deltas.
Matrix absmax_merge(std::span<const Matrix> deltas);

/// Editor parameters bound into a graph, either as trainable variables or as
/// constants. All editor arithmetic lives here so training and inference
/// share one code path. Instantiated for double and long double.
template <typename Scalar>
class BasicEditorGraph {
 public:
  using V = ad::Var<Scalar>;

  BasicEditorGraph(ad::Graph<Scalar>& graph, const EditorParams& params, const EditorOptions& options,
                   bool trainable);
  /// Binds existing leaves, given in EditorParams::kNames order.
  BasicEditorGraph(ad::Graph<Scalar>& graph, const std::array<V, 8>& leaves, const EditorOptions& options);

  /// l_ft = RFC(CFC(RFC(latent ‖ PE))), L×d and elementwise nonnegative.
  V iaip(V latent) const;
  /// Normalized global direction P_m, 1×d.
  V direction(int m) const { return directions_.at(static_cast<std::size_t>(m)); }
  const std::vector<V>& directions() const { return directions_; }
  /// Δw_m^i = l_ft^i ⊙ P_m + P_m, L×d.
  V raw_delta(V lft, int m) const;
  /// sigmoid(E_m^i) · attr_m · Δw_m^i, the increment added to the latent.
  V increment(V lft, int m, int attr) const;

  /// Leaves in EditorParams::kNames order.
  const std::array<V, 8>& leaves() const { return leaves_; }

 private:
  ad::Graph<Scalar>* graph_;
  EditorOptions options_;
  EditorDims dims_;
  std::array<V, 8> leaves_;
  V pe_;
  std::vector<V> directions_;
};

extern template class BasicEditorGraph<double>;
extern template class BasicEditorGraph<long double>;

using EditorGraph = BasicEditorGraph<double>;

struct SingleEdit {
  Matrix increment;  // signed, gated Δw_m
  Matrix edited;     // ŵ_m
};

/// Inference front end over a fixed parameter set.
class Editor {
 public:
  Editor(EditorParams params, EditorOptions options);

  const EditorParams& params() const { return params_; }
  const EditorOptions& options() const { return options_; }
  const EditorDims& dims() const { return dims_; }

  Matrix lft(const Matrix& latent) const;
  /// Normalized directions, M×d.
  Matrix normalized_directions() const;
  /// Signed, gated increments for every attribute (zero where attr is 0).
  std::vector<Matrix> increments(const Matrix& latent, std::span<const int> attrs) const;
  SingleEdit edit_single(const Matrix& latent, int m, int attr) const;
  Matrix edit_multi(const Matrix& latent, std::span<const int> attrs) const;

 private:
  void check_latent(const Matrix& latent) const;

  EditorParams params_;
  EditorOptions options_;
  EditorDims dims_;
};

}  // namespace idstyle
