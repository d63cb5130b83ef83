#include "idstyle/world.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace idstyle {

namespace {

constexpr double kMaxPlantedOverlap = 0.3;
constexpr int kPlantingAttempts = 64;

Matrix normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

std::vector<int> permutation(int n, Rng& rng) {
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(j)]);
  }
  return p;
}

// Removes the components of `v` along each (orthonormal) row of `basis`.
// Applied twice for numerical orthogonality.
void project_out(Eigen::Ref<Eigen::RowVectorXd> v, const std::vector<Eigen::RowVectorXd>& basis) {
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& b : basis) v -= v.dot(b) * b;
  }
}

Matrix plant_directions(const WorldConfig& cfg, Rng& rng) {
  const int d = cfg.dim;
  const int m_count = cfg.attributes;
  for (int attempt = 0; attempt < kPlantingAttempts; ++attempt) {
    Matrix u = Matrix::Zero(m_count, d);
    if (cfg.planted_sparsity && *cfg.planted_sparsity < d) {
      const int k = *cfg.planted_sparsity;
      const std::vector<int> perm = permutation(d, rng);
      for (int m = 0; m < m_count; ++m) {
        for (int j = 0; j < k; ++j) {
          u(m, perm[static_cast<std::size_t>((m * k + j) % d)]) = rng.normal();
        }
      }
    } else {
      u = normal_matrix(m_count, d, rng);
      std::vector<Eigen::RowVectorXd> basis;
      for (int m = 0; m < m_count; ++m) {
        Eigen::RowVectorXd r = u.row(m);
        project_out(r, basis);
        if (r.norm() < 1e-8) break;
        basis.push_back(r / r.norm());
        u.row(m) = basis.back();
      }
    }
    bool ok = true;
    for (int m = 0; m < m_count && ok; ++m) {
      const double n = u.row(m).norm();
      if (n < 1e-8) {
        ok = false;
        break;
      }
      u.row(m) /= n;
    }
    for (int m = 0; m < m_count && ok; ++m) {
      for (int o = m + 1; o < m_count && ok; ++o) {
        ok = std::abs(u.row(m).dot(u.row(o))) < kMaxPlantedOverlap;
      }
    }
    if (ok) return u;
  }
  throw WorldError("build_world: could not plant near-orthogonal directions");
}

}  // namespace

Matrix WorldConfig::rho() const {
  Matrix r(1, layers);
  for (int i = 0; i < layers; ++i) {
    r(0, i) = layer_weights.empty() ? 1.0 / (1.0 + i) : layer_weights[static_cast<std::size_t>(i)];
  }
  return r;
}

void WorldConfig::validate() const {
  auto fail = [](const std::string& what) { throw WorldError("world config: " + what); };
  if (layers < 1 || dim < 1 || attributes < 1 || image_dim < 1 || identity_dim < 1) {
    fail("all dimensions must be positive");
  }
  if (attributes > dim) fail("attributes (" + std::to_string(attributes) + ") exceed dim");
  if (!layer_weights.empty()) {
    if (static_cast<int>(layer_weights.size()) != layers) fail("layer_weights needs one entry per layer");
    for (double w : layer_weights) {
      if (!(w > 0.0)) fail("layer weights must be positive");
    }
  }
  if (planted_sparsity && (*planted_sparsity < 1 || *planted_sparsity > dim)) {
    fail("planted_sparsity must lie in [1, dim]");
  }
  if (identity_dim + attributes > image_dim) {
    fail("identity_dim + attributes exceeds image_dim");
  }
}

SyntheticWorld build_world(const WorldConfig& config) {
  config.validate();
  Rng rng = Rng::stream(config.seed, Stream::World);

  SyntheticWorld w;
  w.config = config;
  w.rho = config.rho();
  w.mixing = normal_matrix(config.image_dim, config.dim, rng);

  const Eigen::MatrixXd a = w.mixing;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < config.dim) {
    throw WorldError("build_world: generator mixing matrix is rank deficient (rank " +
                     std::to_string(qr.rank()) + " < " + std::to_string(config.dim) + ")");
  }
  w.planted = plant_directions(config, rng);

  // Heads c_m with Aᵀc_m ∝ u_m: minimum-norm solution A (AᵀA)⁻¹ u_m.
  const Eigen::LDLT<Eigen::MatrixXd> gram(a.transpose() * a);
  w.heads.resize(config.attributes, config.image_dim);
  for (int m = 0; m < config.attributes; ++m) {
    const Eigen::VectorXd u = w.planted.row(m).transpose();
    Eigen::VectorXd c = a * gram.solve(u);
    w.heads.row(m) = (c / c.norm()).transpose();
  }
  w.biases = Matrix::Zero(1, config.attributes);

  // Orthonormal basis of the planted image-space directions A·u_m.
  std::vector<Eigen::RowVectorXd> basis;
  for (int m = 0; m < config.attributes; ++m) {
    Eigen::RowVectorXd v = (a * w.planted.row(m).transpose()).transpose();
    const double scale = v.norm();
    project_out(v, basis);
    if (v.norm() < 1e-10 * scale) throw WorldError("build_world: planted image directions are rank deficient");
    basis.push_back(v / v.norm());
  }

  w.identity = normal_matrix(config.identity_dim, config.image_dim, rng);
  for (int r = 0; r < config.identity_dim; ++r) {
    Eigen::RowVectorXd v = w.identity.row(r);
    const double scale = v.norm();
    project_out(v, basis);
    if (v.norm() < 1e-10 * scale) throw WorldError("build_world: identity projector is rank deficient");
    w.identity.row(r) = v / v.norm();
  }
  return w;
}

Matrix SyntheticWorld::generate(const Matrix& latent) const {
  if (latent.rows() != config.layers || latent.cols() != config.dim) {
    throw ad::ShapeError("world_generate: expected (" + std::to_string(config.layers) + "x" +
                         std::to_string(config.dim) + "), got (" + std::to_string(latent.rows()) + "x" +
                         std::to_string(latent.cols()) + ")");
  }
  return (rho * latent) * mixing.transpose();
}

Matrix SyntheticWorld::classify(const Matrix& image) const { return image * heads.transpose() + biases; }

Matrix SyntheticWorld::identify(const Matrix& image) const { return image * identity.transpose(); }

std::vector<int> SyntheticWorld::annotate(const Matrix& latent) const {
  const Matrix logits = classify(generate(latent));
  std::vector<int> labels(static_cast<std::size_t>(logits.cols()));
  for (Eigen::Index m = 0; m < logits.cols(); ++m) labels[static_cast<std::size_t>(m)] = logits(0, m) >= 0 ? 1 : -1;
  return labels;
}

Matrix SyntheticWorld::sample_wplus(Rng& rng) const {
  const Matrix wa = normal_matrix(1, config.dim, rng);
  const Matrix wb = normal_matrix(1, config.dim, rng);
  Matrix out(config.layers, config.dim);
  for (int i = 0; i < config.layers; ++i) out.row(i) = rng.below(2) == 0 ? wa : wb;
  return out;
}

template <typename Scalar>
BasicWorldGraph<Scalar>::BasicWorldGraph(ad::Graph<Scalar>& g, const SyntheticWorld& world)
    : graph(&g),
      rho(g.constant(world.rho.cast<Scalar>())),
      logit_map_t(g.constant(Matrix((world.heads * world.mixing).transpose()).cast<Scalar>())),
      biases(g.constant(world.biases.cast<Scalar>())),
      identity_map_t(g.constant(Matrix((world.identity * world.mixing).transpose()).cast<Scalar>())) {}

template struct BasicWorldGraph<double>;
template struct BasicWorldGraph<long double>;

}  // namespace idstyle
