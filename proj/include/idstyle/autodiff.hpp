#pragma once

// Define-by-run reverse-mode differentiation over dense 2-D tensors.
//
// Every operation appends a node to a Graph and evaluates it immediately, so
// node order is a topological order and `backward` is a single reverse sweep.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

namespace idstyle::ad {

template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Raised when an operation receives operands of incompatible shape.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Op : std::uint8_t {
  Leaf,
  MatMul,
  Transpose,
  Add,
  Sub,
  Mul,
  Scale,
  AddScalar,
  Relu,
  Sigmoid,
  ConcatCols,
  SliceRows,
  SliceCols,
  TileRows,
  TileCols,
  Sum,
  Mean,
  L1Norm,
  L2Norm,
  DivByScalar,
  Cosine,
  RowCosine,
  BceWithLogits,
};

inline const char* op_name(Op op) {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::Transpose: return "transpose";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Relu: return "relu";
    case Op::Sigmoid: return "sigmoid";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceRows: return "slice_rows";
    case Op::SliceCols: return "slice_cols";
    case Op::TileRows: return "tile_rows";
    case Op::TileCols: return "tile_cols";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::L1Norm: return "l1_norm";
    case Op::L2Norm: return "l2_norm";
    case Op::DivByScalar: return "div_by_scalar";
    case Op::Cosine: return "cosine";
    case Op::RowCosine: return "row_cosine";
    case Op::BceWithLogits: return "bce_with_logits";
  }
  return "?";
}

/// Guard added to each norm inside cosine similarities.
template <typename Scalar>
inline constexpr Scalar kCosineEps = Scalar(1e-12);

/// Floor applied to the denominator of `div_by_scalar`.
template <typename Scalar>
inline constexpr Scalar kDivFloor = Scalar(1e-12);

template <typename Scalar>
class Graph;

/// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename Scalar>
class Var {
 public:
  Var() = default;
  Var(Graph<Scalar>* graph, std::size_t id) : graph_(graph), id_(id) {}

  Graph<Scalar>& graph() const { return *graph_; }
  std::size_t id() const { return id_; }
  const Tensor<Scalar>& value() const { return graph_->value(*this); }
  const Tensor<Scalar>& grad() const { return graph_->grad(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }

 private:
  Graph<Scalar>* graph_ = nullptr;
  std::size_t id_ = 0;
};

template <typename Scalar = double>
class Graph {
 public:
  using Matrix = Tensor<Scalar>;
  using V = Var<Scalar>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  /// Trainable leaf; receives a gradient in `backward`.
  V variable(Matrix value) { return leaf(std::move(value), true); }
  /// Constant leaf; no gradient is accumulated for it.
  V constant(Matrix value) { return leaf(std::move(value), false); }

  std::size_t size() const { return nodes_.size(); }
  Op op(V v) const { return nodes_[v.id()].op; }
  const Matrix& value(V v) const { return nodes_[v.id()].value; }

  const Matrix& grad(V v) const {
    const Node& n = nodes_[v.id()];
    if (n.grad.size() == 0 && n.value.size() != 0) {
      zero_scratch_ = Matrix::Zero(n.value.rows(), n.value.cols());
      return zero_scratch_;
    }
    return n.grad;
  }

  /// Smallest |input| seen by any non-smooth primitive (relu, L1 norm).
  /// Finite-difference checks are only meaningful away from these kinks.
  Scalar kink_margin() const { return kink_margin_; }

  // -- primitives --------------------------------------------------------

  V matmul(V a, V b) {
    require(a.cols() == b.rows(), Op::MatMul, a, b);
    if constexpr (std::is_same_v<Scalar, double>) {
      return push(Op::MatMul, a, b, value(a) * value(b));
    } else {
      // Scalars without SIMD support gain nothing from blocked GEMM, whose
      // per-call packing buffers dominate at these sizes.
      return push(Op::MatMul, a, b, value(a).lazyProduct(value(b)));
    }
  }

  V transpose(V a) { return push(Op::Transpose, a, value(a).transpose()); }

  V add(V a, V b) {
    require_same(a, b, Op::Add);
    return push(Op::Add, a, b, value(a) + value(b));
  }

  V sub(V a, V b) {
    require_same(a, b, Op::Sub);
    return push(Op::Sub, a, b, value(a) - value(b));
  }

  V mul(V a, V b) {
    require_same(a, b, Op::Mul);
    return push(Op::Mul, a, b, value(a).cwiseProduct(value(b)));
  }

  V scale(V a, Scalar s) {
    V out = push(Op::Scale, a, value(a) * s);
    nodes_.back().aux = s;
    return out;
  }

  V add_scalar(V a, Scalar s) {
    return push(Op::AddScalar, a, (value(a).array() + s).matrix());
  }

  V relu(V a) {
    note_kinks(value(a));
    return push(Op::Relu, a, value(a).cwiseMax(Scalar(0)));
  }

  V sigmoid(V a) {
    Matrix y = value(a).unaryExpr([](Scalar x) { return stable_sigmoid(x); });
    return push(Op::Sigmoid, a, std::move(y));
  }

  V concat_cols(V a, V b) {
    if (a.rows() != b.rows()) fail(Op::ConcatCols, a, b);
    Matrix y(a.rows(), a.cols() + b.cols());
    y << value(a), value(b);
    return push(Op::ConcatCols, a, b, std::move(y));
  }

  V slice_rows(V a, Eigen::Index first, Eigen::Index count) {
    if (first < 0 || count < 0 || first + count > a.rows()) fail_range(Op::SliceRows, a, first, count);
    V out = push(Op::SliceRows, a, value(a).middleRows(first, count));
    nodes_.back().offset = first;
    return out;
  }

  V slice_cols(V a, Eigen::Index first, Eigen::Index count) {
    if (first < 0 || count < 0 || first + count > a.cols()) fail_range(Op::SliceCols, a, first, count);
    V out = push(Op::SliceCols, a, value(a).middleCols(first, count));
    nodes_.back().offset = first;
    return out;
  }

  /// Repeat a 1×c row vector n times: n×c.
  V tile_rows(V a, Eigen::Index n) {
    if (a.rows() != 1) fail(Op::TileRows, a, a);
    return push(Op::TileRows, a, value(a).replicate(n, 1));
  }

  /// Repeat an r×1 column vector n times: r×n.
  V tile_cols(V a, Eigen::Index n) {
    if (a.cols() != 1) fail(Op::TileCols, a, a);
    return push(Op::TileCols, a, value(a).replicate(1, n));
  }

  V sum(V a) { return push(Op::Sum, a, scalar(value(a).sum())); }

  V mean(V a) {
    if (a.value().size() == 0) fail(Op::Mean, a, a);
    return push(Op::Mean, a, scalar(value(a).mean()));
  }

  V l1_norm(V a) {
    note_kinks(value(a));
    return push(Op::L1Norm, a, scalar(value(a).cwiseAbs().sum()));
  }

  /// Frobenius norm.
  V l2_norm(V a) { return push(Op::L2Norm, a, scalar(value(a).norm())); }

  /// a / max(s, floor) for a 1×1 node s.
  V div_by_scalar(V a, V s) {
    if (s.rows() != 1 || s.cols() != 1) fail(Op::DivByScalar, a, s);
    const Scalar den = std::max(value(s)(0, 0), kDivFloor<Scalar>);
    return push(Op::DivByScalar, a, s, value(a) / den);
  }

  /// Cosine similarity of two equally shaped tensors read as flat vectors.
  V cosine(V a, V b) {
    require_same(a, b, Op::Cosine);
    const Matrix& x = value(a);
    const Matrix& y = value(b);
    const Scalar c = x.cwiseProduct(y).sum() /
                     ((x.norm() + kCosineEps<Scalar>) * (y.norm() + kCosineEps<Scalar>));
    return push(Op::Cosine, a, b, scalar(c));
  }

  /// Row-by-row cosine similarity: r×c, r×c -> r×1.
  V row_cosine(V a, V b) {
    require_same(a, b, Op::RowCosine);
    const Matrix& x = value(a);
    const Matrix& y = value(b);
    Matrix c(x.rows(), 1);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      c(i, 0) = x.row(i).dot(y.row(i)) /
                ((x.row(i).norm() + kCosineEps<Scalar>) * (y.row(i).norm() + kCosineEps<Scalar>));
    }
    return push(Op::RowCosine, a, b, std::move(c));
  }

  /// Mean over all entries of binary cross-entropy with logits against
  /// constant targets in [0, 1], evaluated in log-sum-exp form.
  V bce_with_logits(V logits, Matrix targets) {
    if (targets.rows() != logits.rows() || targets.cols() != logits.cols()) {
      std::ostringstream os;
      os << "bce_with_logits: shape mismatch (" << logits.rows() << "x" << logits.cols()
         << ") vs targets (" << targets.rows() << "x" << targets.cols() << ")";
      throw ShapeError(os.str());
    }
    const Matrix& z = value(logits);
    Scalar total = 0;
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      const Scalar zi = z.data()[i];
      total += std::max(zi, Scalar(0)) - targets.data()[i] * zi + std::log1p(std::exp(-std::abs(zi)));
    }
    V out = push(Op::BceWithLogits, logits, scalar(total / static_cast<Scalar>(z.size())));
    nodes_.back().aux_tensor = std::move(targets);
    return out;
  }

  // -- reverse sweep -------------------------------------------------------

  /// Accumulate d(root)/d(node) for every node that depends on a variable.
  void backward(V root) {
    if (root.rows() != 1 || root.cols() != 1) {
      std::ostringstream os;
      os << "backward: root must be scalar, got (" << root.rows() << "x" << root.cols() << ")";
      throw ShapeError(os.str());
    }
    for (Node& n : nodes_) n.grad.resize(0, 0);
    if (!nodes_[root.id()].requires_grad) return;
    nodes_[root.id()].grad = Matrix::Ones(1, 1);
    for (std::size_t k = root.id() + 1; k-- > 0;) {
      Node& n = nodes_[k];
      if (!n.requires_grad || n.grad.size() == 0 || n.op == Op::Leaf) continue;
      propagate(n);
    }
  }

  static Scalar stable_sigmoid(Scalar x) {
    if (x >= 0) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
  }

 private:
  struct Node {
    Op op = Op::Leaf;
    std::ptrdiff_t lhs = -1;
    std::ptrdiff_t rhs = -1;
    bool requires_grad = false;
    Scalar aux = 0;
    Eigen::Index offset = 0;
    Matrix value;
    Matrix grad;
    Matrix aux_tensor;
  };

  static Matrix scalar(Scalar s) {
    Matrix m(1, 1);
    m(0, 0) = s;
    return m;
  }

  V leaf(Matrix value, bool requires_grad) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return V(this, nodes_.size() - 1);
  }

  V push(Op op, V a, Matrix value) { return append(op, a.id(), -1, std::move(value)); }
  V push(Op op, V a, V b, Matrix value) {
    return append(op, a.id(), static_cast<std::ptrdiff_t>(b.id()), std::move(value));
  }

  V append(Op op, std::size_t a, std::ptrdiff_t b, Matrix value) {
    Node n;
    n.op = op;
    n.lhs = static_cast<std::ptrdiff_t>(a);
    n.rhs = b;
    n.requires_grad = nodes_[a].requires_grad || (b >= 0 && nodes_[static_cast<std::size_t>(b)].requires_grad);
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return V(this, nodes_.size() - 1);
  }

  void note_kinks(const Matrix& x) {
    if (x.size() > 0) kink_margin_ = std::min(kink_margin_, x.cwiseAbs().minCoeff());
  }

  Matrix& grad_slot(std::ptrdiff_t id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  bool wants(std::ptrdiff_t id) const {
    return id >= 0 && nodes_[static_cast<std::size_t>(id)].requires_grad;
  }

  const Matrix& val(std::ptrdiff_t id) const { return nodes_[static_cast<std::size_t>(id)].value; }

  void propagate(const Node& n) {
    const Matrix& g = n.grad;
    const std::ptrdiff_t a = n.lhs;
    const std::ptrdiff_t b = n.rhs;
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::MatMul:
        if (wants(a)) grad_slot(a).noalias() += g * val(b).transpose();
        if (wants(b)) grad_slot(b).noalias() += val(a).transpose() * g;
        break;
      case Op::Transpose:
        if (wants(a)) grad_slot(a) += g.transpose();
        break;
      case Op::Add:
        if (wants(a)) grad_slot(a) += g;
        if (wants(b)) grad_slot(b) += g;
        break;
      case Op::Sub:
        if (wants(a)) grad_slot(a) += g;
        if (wants(b)) grad_slot(b) -= g;
        break;
      case Op::Mul:
        if (wants(a)) grad_slot(a) += g.cwiseProduct(val(b));
        if (wants(b)) grad_slot(b) += g.cwiseProduct(val(a));
        break;
      case Op::Scale:
        if (wants(a)) grad_slot(a) += g * n.aux;
        break;
      case Op::AddScalar:
        if (wants(a)) grad_slot(a) += g;
        break;
      case Op::Relu:
        // Subgradient at 0 is 0.
        if (wants(a)) {
          grad_slot(a) += (val(a).array() > Scalar(0)).select(g, Scalar(0)).matrix();
        }
        break;
      case Op::Sigmoid:
        if (wants(a)) {
          grad_slot(a) += g.cwiseProduct((n.value.array() * (Scalar(1) - n.value.array())).matrix());
        }
        break;
      case Op::ConcatCols:
        if (wants(a)) grad_slot(a) += g.leftCols(val(a).cols());
        if (wants(b)) grad_slot(b) += g.rightCols(val(b).cols());
        break;
      case Op::SliceRows:
        if (wants(a)) grad_slot(a).middleRows(n.offset, g.rows()) += g;
        break;
      case Op::SliceCols:
        if (wants(a)) grad_slot(a).middleCols(n.offset, g.cols()) += g;
        break;
      case Op::TileRows:
        if (wants(a)) grad_slot(a) += g.colwise().sum();
        break;
      case Op::TileCols:
        if (wants(a)) grad_slot(a) += g.rowwise().sum();
        break;
      case Op::Sum:
        if (wants(a)) grad_slot(a).array() += g(0, 0);
        break;
      case Op::Mean:
        if (wants(a)) grad_slot(a).array() += g(0, 0) / static_cast<Scalar>(val(a).size());
        break;
      case Op::L1Norm:
        if (wants(a)) grad_slot(a) += g(0, 0) * val(a).unaryExpr([](Scalar x) {
          return x > 0 ? Scalar(1) : (x < 0 ? Scalar(-1) : Scalar(0));
        });
        break;
      case Op::L2Norm:
        if (wants(a) && n.value(0, 0) > 0) grad_slot(a) += (g(0, 0) / n.value(0, 0)) * val(a);
        break;
      case Op::DivByScalar: {
        const Scalar s = val(b)(0, 0);
        const Scalar den = std::max(s, kDivFloor<Scalar>);
        if (wants(a)) grad_slot(a) += g / den;
        if (wants(b) && s > kDivFloor<Scalar>) {
          grad_slot(b)(0, 0) -= g.cwiseProduct(val(a)).sum() / (den * den);
        }
        break;
      }
      case Op::Cosine: {
        const Matrix& x = val(a);
        const Matrix& y = val(b);
        const Scalar nx = x.norm();
        const Scalar ny = y.norm();
        const Scalar dx = nx + kCosineEps<Scalar>;
        const Scalar dy = ny + kCosineEps<Scalar>;
        const Scalar c = n.value(0, 0);
        const Scalar go = g(0, 0);
        if (wants(a)) {
          Matrix d = y / (dx * dy);
          if (nx > 0) d -= (c / (nx * dx)) * x;
          grad_slot(a) += go * d;
        }
        if (wants(b)) {
          Matrix d = x / (dx * dy);
          if (ny > 0) d -= (c / (ny * dy)) * y;
          grad_slot(b) += go * d;
        }
        break;
      }
      case Op::RowCosine: {
        const Matrix& x = val(a);
        const Matrix& y = val(b);
        const bool ga = wants(a);
        const bool gb = wants(b);
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          const Scalar nx = x.row(i).norm();
          const Scalar ny = y.row(i).norm();
          const Scalar dx = nx + kCosineEps<Scalar>;
          const Scalar dy = ny + kCosineEps<Scalar>;
          const Scalar c = n.value(i, 0);
          const Scalar go = g(i, 0);
          if (ga) {
            auto row = grad_slot(a).row(i);
            row += (go / (dx * dy)) * y.row(i);
            if (nx > 0) row -= (go * c / (nx * dx)) * x.row(i);
          }
          if (gb) {
            auto row = grad_slot(b).row(i);
            row += (go / (dx * dy)) * x.row(i);
            if (ny > 0) row -= (go * c / (ny * dy)) * y.row(i);
          }
        }
        break;
      }
      case Op::BceWithLogits:
        if (wants(a)) {
          const Matrix& z = val(a);
          const Scalar w = g(0, 0) / static_cast<Scalar>(z.size());
          Matrix& out = grad_slot(a);
          for (Eigen::Index i = 0; i < z.size(); ++i) {
            out.data()[i] += w * (stable_sigmoid(z.data()[i]) - n.aux_tensor.data()[i]);
          }
        }
        break;
    }
  }

  void require(bool ok, Op op, V a, V b) const {
    if (!ok) fail(op, a, b);
  }

  void require_same(V a, V b, Op op) const {
    if (a.rows() != b.rows() || a.cols() != b.cols()) fail(op, a, b);
  }

  [[noreturn]] void fail(Op op, V a, V b) const {
    std::ostringstream os;
    os << op_name(op) << ": shape mismatch (" << a.rows() << "x" << a.cols() << ") vs (" << b.rows()
       << "x" << b.cols() << ")";
    throw ShapeError(os.str());
  }

  [[noreturn]] void fail_range(Op op, V a, Eigen::Index first, Eigen::Index count) const {
    std::ostringstream os;
    os << op_name(op) << ": range [" << first << ", " << first + count << ") out of bounds for ("
       << a.rows() << "x" << a.cols() << ")";
    throw ShapeError(os.str());
  }

  std::vector<Node> nodes_;
  Scalar kink_margin_ = std::numeric_limits<Scalar>::infinity();
  mutable Matrix zero_scratch_;
};

// -- expression-friendly free functions ---------------------------------------

template <typename S> Var<S> operator+(Var<S> a, Var<S> b) { return a.graph().add(a, b); }
template <typename S> Var<S> operator-(Var<S> a, Var<S> b) { return a.graph().sub(a, b); }
/// Elementwise (Hadamard) product.
template <typename S> Var<S> operator*(Var<S> a, Var<S> b) { return a.graph().mul(a, b); }
template <typename S> Var<S> operator*(std::type_identity_t<S> s, Var<S> a) { return a.graph().scale(a, s); }
template <typename S> Var<S> operator*(Var<S> a, std::type_identity_t<S> s) { return a.graph().scale(a, s); }
template <typename S> Var<S> operator+(Var<S> a, std::type_identity_t<S> s) { return a.graph().add_scalar(a, s); }
template <typename S> Var<S> operator+(std::type_identity_t<S> s, Var<S> a) { return a.graph().add_scalar(a, s); }
template <typename S> Var<S> operator-(std::type_identity_t<S> s, Var<S> a) { return a.graph().add_scalar(a.graph().scale(a, S(-1)), s); }

template <typename S> Var<S> matmul(Var<S> a, Var<S> b) { return a.graph().matmul(a, b); }
template <typename S> Var<S> transpose(Var<S> a) { return a.graph().transpose(a); }
template <typename S> Var<S> relu(Var<S> a) { return a.graph().relu(a); }
template <typename S> Var<S> sigmoid(Var<S> a) { return a.graph().sigmoid(a); }
template <typename S> Var<S> concat_cols(Var<S> a, Var<S> b) { return a.graph().concat_cols(a, b); }
template <typename S> Var<S> slice_rows(Var<S> a, Eigen::Index first, Eigen::Index count) {
  return a.graph().slice_rows(a, first, count);
}
template <typename S> Var<S> slice_cols(Var<S> a, Eigen::Index first, Eigen::Index count) {
  return a.graph().slice_cols(a, first, count);
}
template <typename S> Var<S> row(Var<S> a, Eigen::Index i) { return a.graph().slice_rows(a, i, 1); }
template <typename S> Var<S> tile_rows(Var<S> a, Eigen::Index n) { return a.graph().tile_rows(a, n); }
template <typename S> Var<S> tile_cols(Var<S> a, Eigen::Index n) { return a.graph().tile_cols(a, n); }
template <typename S> Var<S> sum(Var<S> a) { return a.graph().sum(a); }
template <typename S> Var<S> mean(Var<S> a) { return a.graph().mean(a); }
template <typename S> Var<S> l1_norm(Var<S> a) { return a.graph().l1_norm(a); }
template <typename S> Var<S> l2_norm(Var<S> a) { return a.graph().l2_norm(a); }
template <typename S> Var<S> div_by_scalar(Var<S> a, Var<S> s) { return a.graph().div_by_scalar(a, s); }
template <typename S> Var<S> cosine(Var<S> a, Var<S> b) { return a.graph().cosine(a, b); }
template <typename S> Var<S> row_cosine(Var<S> a, Var<S> b) { return a.graph().row_cosine(a, b); }
template <typename S> Var<S> bce_with_logits(Var<S> z, Tensor<S> targets) {
  return z.graph().bce_with_logits(z, std::move(targets));
}

// -- finite-difference verification -------------------------------------------

template <typename Scalar>
struct GradCheckResult {
  Scalar max_relative_error = 0;
  std::size_t worst_leaf = 0;
  Eigen::Index worst_index = 0;
  Scalar analytic_at_worst = 0;
  Scalar numeric_at_worst = 0;
  /// Distance of the base point from the nearest non-smooth kink.
  Scalar kink_margin = std::numeric_limits<Scalar>::infinity();
};

/// Builds a scalar from leaves bound to the given graph.
template <typename Scalar>
using ScalarFunction = std::function<Var<Scalar>(Graph<Scalar>&, const std::vector<Var<Scalar>>&)>;

/// Compare reverse-mode gradients of `f` with central differences of `oracle`
/// at `point`. The oracle must compute the same function; evaluating it in a
/// wider scalar type lowers the cancellation noise of f(x+eps) - f(x-eps)
/// without touching the analytic pass.
///
/// Error per coordinate is |a - n| / max(1e-12, |a| + |n|); the maximum over
/// all coordinates of all leaves is reported.
template <typename Scalar, typename OracleScalar>
GradCheckResult<Scalar> grad_check(const ScalarFunction<Scalar>& f, const ScalarFunction<OracleScalar>& oracle,
                                   const std::vector<Tensor<Scalar>>& point, Scalar eps) {
  auto bind = [](const auto& fn, const auto& at, auto& g) {
    std::vector<std::decay_t<decltype(g.variable(at.front()))>> leaves;
    leaves.reserve(at.size());
    for (const auto& t : at) leaves.push_back(g.variable(t));
    return std::make_pair(leaves, fn(g, leaves));
  };

  Graph<Scalar> g;
  auto [leaves, root] = bind(f, point, g);
  g.backward(root);

  GradCheckResult<Scalar> result;
  result.kink_margin = g.kink_margin();
  std::vector<Tensor<OracleScalar>> probe;
  probe.reserve(point.size());
  for (const auto& t : point) probe.push_back(t.template cast<OracleScalar>());
  const OracleScalar h = eps;
  for (std::size_t k = 0; k < point.size(); ++k) {
    const Tensor<Scalar> analytic = g.grad(leaves[k]);
    for (Eigen::Index i = 0; i < point[k].size(); ++i) {
      const OracleScalar x0 = probe[k].data()[i];
      probe[k].data()[i] = x0 + h;
      Graph<OracleScalar> gp;
      const OracleScalar fp = bind(oracle, probe, gp).second.value()(0, 0);
      probe[k].data()[i] = x0 - h;
      Graph<OracleScalar> gm;
      const OracleScalar fm = bind(oracle, probe, gm).second.value()(0, 0);
      probe[k].data()[i] = x0;

      const auto numeric = static_cast<Scalar>((fp - fm) / (2 * h));
      const Scalar a = analytic.data()[i];
      const Scalar err = std::abs(a - numeric) / std::max(Scalar(1e-12), std::abs(a) + std::abs(numeric));
      if (err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_leaf = k;
        result.worst_index = i;
        result.analytic_at_worst = a;
        result.numeric_at_worst = numeric;
      }
    }
  }
  return result;
}

/// Same-precision check: `f` is its own finite-difference oracle.
template <typename Scalar>
GradCheckResult<Scalar> grad_check(const ScalarFunction<Scalar>& f, const std::vector<Tensor<Scalar>>& point,
                                   Scalar eps) {
  return grad_check<Scalar, Scalar>(f, f, point, eps);
}

}  // namespace idstyle::ad
