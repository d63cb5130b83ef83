#include "idstyle/editor.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace idstyle {

namespace {

void check_attribute(int m, int attr, int count) {
  if (m < 0 || m >= count) {
    throw std::out_of_range("attribute index " + std::to_string(m) + " out of range [0, " +
                            std::to_string(count) + ")");
  }
  if (attr < -1 || attr > 1) throw std::invalid_argument("attribute target must be -1, 0 or +1");
}

Matrix glorot(Eigen::Index fan_in, Eigen::Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
  return m;
}

}  // namespace

std::size_t parameter_count(const EditorDims& dims) {
  const auto l = static_cast<std::size_t>(dims.layers);
  const auto d = static_cast<std::size_t>(dims.dim);
  const auto m = static_cast<std::size_t>(dims.attributes);
  return (2 * d * d + d) + (l * l + l) + (d * d + d) + m * d + m * l;
}

std::size_t EditorParams::scalar_count() const {
  std::size_t n = 0;
  for (const Matrix* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

EditorParams zero_params(const EditorDims& dims) {
  const int l = dims.layers;
  const int d = dims.dim;
  const int m = dims.attributes;
  return {Matrix::Zero(m, d), Matrix::Zero(m, l), Matrix::Zero(2 * d, d), Matrix::Zero(1, d),
          Matrix::Zero(l, l), Matrix::Zero(1, l), Matrix::Zero(d, d),     Matrix::Zero(1, d)};
}

EditorParams init_params(const EditorDims& dims, Rng& rng) {
  EditorParams p = zero_params(dims);
  p.w1 = glorot(2 * dims.dim, dims.dim, rng);
  p.wc = glorot(dims.layers, dims.layers, rng);
  p.w2 = glorot(dims.dim, dims.dim, rng);
  const double s = 1.0 / std::sqrt(static_cast<double>(dims.dim));
  for (Eigen::Index i = 0; i < p.directions.size(); ++i) p.directions.data()[i] = s * rng.normal();
  return p;
}

Matrix positional_encoding(int layers, int dim) {
  if (dim % 2 != 0) throw std::invalid_argument("positional_encoding: dim must be even, got " + std::to_string(dim));
  Matrix pe(layers, dim);
  for (int pos = 0; pos < layers; ++pos) {
    for (int j = 0; j < dim / 2; ++j) {
      const double angle = pos / std::pow(10000.0, 2.0 * j / dim);
      pe(pos, 2 * j) = std::sin(angle);
      pe(pos, 2 * j + 1) = std::cos(angle);
    }
  }
  return pe;
}

Matrix absmax_merge(std::span<const Matrix> deltas) {
  if (deltas.empty()) throw std::invalid_argument("absmax_merge: no deltas given");
  Matrix out = deltas.front();
  for (const Matrix& d : deltas.subspan(1)) {
    if (d.rows() != out.rows() || d.cols() != out.cols()) {
      throw ad::ShapeError("absmax_merge: shape mismatch (" + std::to_string(out.rows()) + "x" +
                           std::to_string(out.cols()) + ") vs (" + std::to_string(d.rows()) + "x" +
                           std::to_string(d.cols()) + ")");
    }
    for (Eigen::Index i = 0; i < out.size(); ++i) {
      if (std::abs(d.data()[i]) > std::abs(out.data()[i])) out.data()[i] = d.data()[i];
    }
  }
  return out;
}

// -- EditorGraph ---------------------------------------------------------------

namespace {

template <typename Scalar>
std::array<ad::Var<Scalar>, 8> bind_leaves(ad::Graph<Scalar>& graph, const EditorParams& params, bool trainable) {
  std::array<ad::Var<Scalar>, 8> leaves;
  const auto tensors = params.tensors();
  for (std::size_t k = 0; k < tensors.size(); ++k) {
    ad::Tensor<Scalar> t = tensors[k]->template cast<Scalar>();
    leaves[k] = trainable ? graph.variable(std::move(t)) : graph.constant(std::move(t));
  }
  return leaves;
}

}  // namespace

template <typename Scalar>
BasicEditorGraph<Scalar>::BasicEditorGraph(ad::Graph<Scalar>& graph, const EditorParams& params,
                                           const EditorOptions& options, bool trainable)
    : BasicEditorGraph(graph, bind_leaves(graph, params, trainable), options) {}

template <typename Scalar>
BasicEditorGraph<Scalar>::BasicEditorGraph(ad::Graph<Scalar>& graph, const std::array<V, 8>& leaves,
                                           const EditorOptions& options)
    : graph_(&graph),
      options_(options),
      dims_{static_cast<int>(leaves[1].cols()), static_cast<int>(leaves[0].cols()), static_cast<int>(leaves[0].rows())},
      leaves_(leaves) {
  const Matrix pe = options.use_input_pe ? positional_encoding(dims_.layers, dims_.dim)
                                         : Matrix::Zero(dims_.layers, dims_.dim);
  pe_ = graph.constant(pe.cast<Scalar>());
  const V raw = leaves_[0];
  for (int m = 0; m < dims_.attributes; ++m) {
    const V p = row(raw, m);
    const V norm = options.direction_norm == DirectionNorm::L2 ? l2_norm(p) : l1_norm(p);
    directions_.push_back(div_by_scalar(p, norm));
  }
}

template <typename Scalar>
ad::Var<Scalar> BasicEditorGraph<Scalar>::iaip(V latent) const {
  const V w1 = leaves_[2], b1 = leaves_[3], wc = leaves_[4], bc = leaves_[5], w2 = leaves_[6], b2 = leaves_[7];
  const Eigen::Index l = dims_.layers;
  const Eigen::Index d = dims_.dim;
  V h = relu(matmul(concat_cols(latent, pe_), w1) + tile_rows(b1, l));
  if (options_.use_cfc) h = relu(transpose(matmul(transpose(h), wc) + tile_rows(bc, d)));
  return relu(matmul(h, w2) + tile_rows(b2, l));
}

template <typename Scalar>
ad::Var<Scalar> BasicEditorGraph<Scalar>::raw_delta(V lft, int m) const {
  const V p = tile_rows(direction(m), dims_.layers);
  return lft * p + p;
}

template <typename Scalar>
ad::Var<Scalar> BasicEditorGraph<Scalar>::increment(V lft, int m, int attr) const {
  check_attribute(m, attr, dims_.attributes);
  V delta = static_cast<Scalar>(attr) * raw_delta(lft, m);
  if (!options_.use_output_gate) return delta;
  const V gate = sigmoid(transpose(row(leaves_[1], m)));
  return tile_cols(gate, dims_.dim) * delta;
}

template class BasicEditorGraph<double>;
template class BasicEditorGraph<long double>;

// -- Editor ----------------------------------------------------------------------

Editor::Editor(EditorParams params, EditorOptions options)
    : params_(std::move(params)), options_(options), dims_(params_.dims()) {}

void Editor::check_latent(const Matrix& latent) const {
  if (latent.rows() != dims_.layers || latent.cols() != dims_.dim) {
    throw ad::ShapeError("latent shape (" + std::to_string(latent.rows()) + "x" + std::to_string(latent.cols()) +
                         ") does not match editor (" + std::to_string(dims_.layers) + "x" +
                         std::to_string(dims_.dim) + ")");
  }
}

Matrix Editor::lft(const Matrix& latent) const {
  check_latent(latent);
  Graph g;
  const EditorGraph eg(g, params_, options_, false);
  return eg.iaip(g.constant(latent)).value();
}

Matrix Editor::normalized_directions() const {
  Graph g;
  const EditorGraph eg(g, params_, options_, false);
  Matrix out(dims_.attributes, dims_.dim);
  for (int m = 0; m < dims_.attributes; ++m) out.row(m) = eg.direction(m).value();
  return out;
}

std::vector<Matrix> Editor::increments(const Matrix& latent, std::span<const int> attrs) const {
  check_latent(latent);
  if (static_cast<int>(attrs.size()) != dims_.attributes) {
    throw std::invalid_argument("expected " + std::to_string(dims_.attributes) + " attribute targets, got " +
                                std::to_string(attrs.size()));
  }
  Graph g;
  const EditorGraph eg(g, params_, options_, false);
  const Var lft = eg.iaip(g.constant(latent));
  std::vector<Matrix> out;
  out.reserve(attrs.size());
  for (int m = 0; m < dims_.attributes; ++m) {
    const int attr = attrs[static_cast<std::size_t>(m)];
    check_attribute(m, attr, dims_.attributes);
    out.push_back(attr == 0 ? Matrix::Zero(dims_.layers, dims_.dim) : eg.increment(lft, m, attr).value());
  }
  return out;
}

SingleEdit Editor::edit_single(const Matrix& latent, int m, int attr) const {
  check_latent(latent);
  check_attribute(m, attr, dims_.attributes);
  if (attr == 0) return {Matrix::Zero(dims_.layers, dims_.dim), latent};
  Graph g;
  const EditorGraph eg(g, params_, options_, false);
  const Var inc = eg.increment(eg.iaip(g.constant(latent)), m, attr);
  return {inc.value(), latent + inc.value()};
}

Matrix Editor::edit_multi(const Matrix& latent, std::span<const int> attrs) const {
  const std::vector<Matrix> incs = increments(latent, attrs);
  return latent + absmax_merge(incs);
}

}  // namespace idstyle
