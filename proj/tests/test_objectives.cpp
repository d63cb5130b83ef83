#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "idstyle/objectives.hpp"
#include "idstyle/rng.hpp"

namespace idstyle {
namespace {

Matrix random_matrix(int r, int c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

Matrix unit_row(Matrix v) { return v / v.norm(); }

double scalar(const Var& v) { return v.value()(0, 0); }

std::vector<Var> constants(Graph& g, const std::vector<Matrix>& ms) {
  std::vector<Var> out;
  for (const Matrix& m : ms) out.push_back(g.constant(m));
  return out;
}

// Cosine with the same per-norm guard the graph op uses.
double guarded_cosine(double dot, double norm_a, double norm_b) {
  return dot / ((norm_a + 1e-12) * (norm_b + 1e-12));
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

TEST(SparsityLoss, OneHotUnitIsOne) {
  Graph g;
  Matrix p = Matrix::Zero(1, 8);
  p(0, 3) = 1.0;
  EXPECT_DOUBLE_EQ(scalar(sparsity_loss(constants(g, {p}))), 1.0);
}

TEST(SparsityLoss, UniformUnitIsSqrtDim) {
  Graph g;
  const Matrix p = Matrix::Constant(1, 32, 1.0 / std::sqrt(32.0));
  EXPECT_NEAR(scalar(sparsity_loss(constants(g, {p}))), std::sqrt(32.0), 1e-12);
}

TEST(SparsityLoss, MatchesScalarLoop) {
  Rng rng(1);
  std::vector<Matrix> ps;
  double expected = 0;
  for (int m = 0; m < 4; ++m) {
    ps.push_back(unit_row(random_matrix(1, 32, rng)));
    for (int j = 0; j < 32; ++j) expected += std::abs(ps.back()(0, j));
  }
  Graph g;
  EXPECT_NEAR(scalar(sparsity_loss(constants(g, ps))), expected, 1e-12);
}

TEST(DirectionLoss, OnesAndPositiveConstantsGiveZero) {
  Rng rng(2);
  const Matrix p = unit_row(random_matrix(1, 16, rng));
  Graph g;
  EXPECT_NEAR(scalar(direction_loss(g.constant(Matrix::Ones(6, 16)), constants(g, {p}))), 0.0, 1e-10);
  Matrix scaled(6, 16);
  for (int i = 0; i < 6; ++i) scaled.row(i).setConstant(0.5 + i);
  EXPECT_NEAR(scalar(direction_loss(g.constant(scaled), constants(g, {p}))), 0.0, 1e-10);
}

TEST(DirectionLoss, HandEvaluatedTwoDimensionalCase) {
  Matrix p(1, 2);
  p << 1 / std::sqrt(2.0), 1 / std::sqrt(2.0);
  Matrix l(1, 2);
  l << 1, 0;
  Graph g;
  EXPECT_NEAR(scalar(direction_loss(g.constant(l), constants(g, {p}))), 1.0 - guarded_cosine(0.5, std::sqrt(0.5), 1.0),
              1e-14);
  EXPECT_NEAR(scalar(direction_loss(g.constant(l), constants(g, {p}))), 0.29289, 1e-5);
}

TEST(DirectionLoss, MatchesScalarLoop) {
  Rng rng(3);
  const Matrix l = random_matrix(6, 10, rng);
  std::vector<Matrix> ps = {unit_row(random_matrix(1, 10, rng)), unit_row(random_matrix(1, 10, rng))};
  double expected = 0;
  for (const Matrix& p : ps) {
    for (int i = 0; i < 6; ++i) {
      double dot = 0, na = 0, nb = 0;
      for (int j = 0; j < 10; ++j) {
        const double a = l(i, j) * p(0, j);
        dot += a * p(0, j);
        na += a * a;
        nb += p(0, j) * p(0, j);
      }
      expected += 1.0 - guarded_cosine(dot, std::sqrt(na), std::sqrt(nb));
    }
  }
  Graph g;
  EXPECT_NEAR(scalar(direction_loss(g.constant(l), constants(g, ps))), expected, 1e-12);
}

TEST(DirectionLoss, RowRescalingInvariance) {
  Rng rng(4);
  const Matrix l = random_matrix(6, 12, rng);
  const std::vector<Matrix> ps = {unit_row(random_matrix(1, 12, rng)), unit_row(random_matrix(1, 12, rng))};
  Graph g;
  const double base = scalar(direction_loss(g.constant(l), constants(g, ps)));
  for (int i = 0; i < 6; ++i) {
    Matrix scaled = l;
    scaled.row(i) *= 0.01 + 7.0 * (i + 1);
    EXPECT_NEAR(scalar(direction_loss(g.constant(scaled), constants(g, ps))), base, 1e-9);
  }
}

TEST(NeighborhoodLoss, Examples) {
  const Matrix w = Matrix::Ones(6, 8);
  Graph g;
  EXPECT_EQ(scalar(neighborhood_loss(constants(g, {w, w}), g.constant(w))), 0.0);
  Matrix one = w;
  one(2, 5) += 3.0;
  EXPECT_DOUBLE_EQ(scalar(neighborhood_loss(constants(g, {one}), g.constant(w))), 3.0);
  Matrix a = w, b = w;
  a(0, 0) += 1.0;
  b(1, 1) += 1.2;
  b(3, 2) -= 1.6;
  EXPECT_NEAR(scalar(neighborhood_loss(constants(g, {a, b}), g.constant(w))), 3.0, 1e-12);
}

TEST(ClassificationLoss, Examples) {
  Graph g;
  EXPECT_NEAR(scalar(classification_loss(g.constant(Matrix::Zero(1, 1)), Matrix::Ones(1, 1))), std::log(2.0),
              1e-15);
  EXPECT_LT(scalar(classification_loss(g.constant(Matrix::Constant(1, 1, 30.0)), Matrix::Ones(1, 1))), 1e-12);
  Matrix z(1, 2), t(1, 2);
  z << 1.0, -2.0;
  t << 1, 0;
  const double got = scalar(classification_loss(g.constant(z), t));
  EXPECT_NEAR(got, (softplus(-1.0) + softplus(-2.0)) / 2, 1e-12);
  EXPECT_NEAR(got, (0.313262 + 0.126928) / 2, 1e-6);
}

TEST(ClassificationLoss, SaturatedLogitsStayFinite) {
  Matrix z(1, 2), t(1, 2);
  z << 800.0, -800.0;
  t << 0, 1;
  Graph g;
  const Var zv = g.variable(z);
  const Var loss = classification_loss(zv, t);
  EXPECT_NEAR(scalar(loss), 800.0, 1e-9);
  g.backward(loss);
  EXPECT_TRUE(zv.grad().allFinite());
}

TEST(IdentityLoss, Examples) {
  Matrix a(1, 3), b(1, 3);
  a << 1, 2, 3;
  b << 3, 0, -1;
  Graph g;
  // The norm guard shifts these by about 1e-12/‖a‖.
  EXPECT_NEAR(scalar(identity_loss(g.constant(a), g.constant(a))), 0.0, 1e-11);
  EXPECT_NEAR(scalar(identity_loss(g.constant(a), g.constant(b))), 1.0, 1e-15);
  EXPECT_NEAR(scalar(identity_loss(g.constant(a), g.constant(-a))), 2.0, 1e-11);
  EXPECT_NEAR(scalar(identity_loss(g.constant(a), g.constant(a))), 1.0 - guarded_cosine(14, std::sqrt(14.0), std::sqrt(14.0)),
              1e-15);
}

TEST(TotalLoss, Examples) {
  const LossWeights w;
  EXPECT_EQ(total_loss(LossTerms<double>{}, w), 0.0);
  EXPECT_NEAR(total_loss(LossTerms<double>{1, 1, 1, 1, 1}, w), 9.3, 1e-12);
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const LossTerms<double> terms{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    const LossWeights lw{rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform(), rng.uniform()};
    const double expected = lw.classification * terms.classification + lw.neighborhood * terms.neighborhood +
                            lw.sparsity * terms.sparsity + lw.direction * terms.direction +
                            lw.identity * terms.identity;
    EXPECT_NEAR(total_loss(terms, lw), expected, 1e-12);
    Graph g;
    const LossTerms<Var> vars{g.constant(Matrix::Constant(1, 1, terms.classification)),
                              g.constant(Matrix::Constant(1, 1, terms.neighborhood)),
                              g.constant(Matrix::Constant(1, 1, terms.sparsity)),
                              g.constant(Matrix::Constant(1, 1, terms.direction)),
                              g.constant(Matrix::Constant(1, 1, terms.identity))};
    EXPECT_NEAR(scalar(total_loss(vars, lw)), expected, 1e-12);
  }
}

TEST(LossWeights, DefaultsAndValidation) {
  const LossWeights w;
  EXPECT_EQ(w.neighborhood, 0.3);
  EXPECT_EQ(w.sparsity, 1.0);
  EXPECT_EQ(w.direction, 1.0);
  EXPECT_EQ(w.classification, 2.0);
  EXPECT_EQ(w.identity, 5.0);
  EXPECT_NO_THROW(w.validate());
  LossWeights bad;
  bad.identity = -0.1;
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = LossWeights{};
  bad.sparsity = std::nan("");
  EXPECT_THROW(bad.validate(), ConfigError);
  bad = LossWeights{};
  bad.direction = 0.0;
  EXPECT_NO_THROW(bad.validate());
}

TEST(Losses, NonNegativeOnRandomInputs) {
  Rng rng(6);
  for (int t = 0; t < 100; ++t) {
    Graph g;
    const std::vector<Matrix> ps = {unit_row(random_matrix(1, 8, rng)), unit_row(random_matrix(1, 8, rng))};
    EXPECT_GE(scalar(sparsity_loss(constants(g, ps))), 0.0);
    EXPECT_GE(scalar(direction_loss(g.constant(random_matrix(4, 8, rng)), constants(g, ps))), -1e-15);
    const Matrix w = random_matrix(4, 8, rng);
    EXPECT_GE(scalar(neighborhood_loss(constants(g, {random_matrix(4, 8, rng)}), g.constant(w))), 0.0);
    Matrix bits(1, 3);
    for (int m = 0; m < 3; ++m) bits(0, m) = static_cast<double>(rng.below(2));
    EXPECT_GE(scalar(classification_loss(g.constant(5.0 * random_matrix(1, 3, rng)), bits)), 0.0);
    const double id = scalar(identity_loss(g.constant(random_matrix(1, 5, rng)), g.constant(random_matrix(1, 5, rng))));
    EXPECT_GE(id, -1e-15);
    EXPECT_LE(id, 2.0 + 1e-15);
  }
}

// With λ_k = 0 the gradient must equal that of the remaining weighted sum.
TEST(TotalLoss, ZeroWeightRemovesGradientExactly) {
  Rng rng(7);
  const Matrix x0 = random_matrix(2, 8, rng);
  const Matrix w_org = random_matrix(2, 8, rng);
  Matrix bits(1, 2);
  bits << 1, 0;
  const Matrix feat = random_matrix(1, 8, rng);

  auto terms_of = [&](Graph& g, const Var& x) {
    const Var p0 = div_by_scalar(slice_rows(x, 0, 1), l2_norm(slice_rows(x, 0, 1)));
    const Var p1 = div_by_scalar(slice_rows(x, 1, 1), l2_norm(slice_rows(x, 1, 1)));
    const std::vector<Var> ps = {p0, p1};
    LossTerms<Var> t;
    t.classification = classification_loss(matmul(slice_rows(x, 0, 1), transpose(x)), bits);
    t.neighborhood = neighborhood_loss(std::vector<Var>{x * x}, g.constant(w_org));
    t.sparsity = sparsity_loss(ps);
    t.direction = direction_loss(sigmoid(x), ps);
    t.identity = identity_loss(g.constant(feat), slice_rows(x, 1, 1));
    return t;
  };

  double LossWeights::*const members[] = {&LossWeights::classification, &LossWeights::neighborhood,
                                          &LossWeights::sparsity, &LossWeights::direction, &LossWeights::identity};
  for (int k = 0; k < 5; ++k) {
    LossWeights ablated;
    ablated.*members[k] = 0.0;

    Graph g1;
    const Var x1 = g1.variable(x0);
    g1.backward(total_loss(terms_of(g1, x1), ablated));

    Graph g2;
    const Var x2 = g2.variable(x0);
    const LossTerms<Var> t = terms_of(g2, x2);
    const Var parts[] = {t.classification, t.neighborhood, t.sparsity, t.direction, t.identity};
    Var rest;
    bool any = false;
    for (int j = 0; j < 5; ++j) {
      if (j == k) continue;
      const Var scaled = (LossWeights{}.*members[j]) * parts[j];
      rest = any ? rest + scaled : scaled;
      any = true;
    }
    g2.backward(rest);
    EXPECT_LT((x1.grad() - x2.grad()).cwiseAbs().maxCoeff(), 1e-12) << "term " << k;
  }
}

}  // namespace
}  // namespace idstyle
