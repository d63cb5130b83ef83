#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "idstyle/optimizer.hpp"
#include "idstyle/rng.hpp"
#include "test_util.hpp"

namespace idstyle {
namespace {

struct Problem {
  std::vector<Matrix> params;
  std::vector<Matrix*> ptrs;
  AdaBeliefState state;

  explicit Problem(std::vector<Matrix> init) : params(std::move(init)) {
    for (Matrix& p : params) ptrs.push_back(&p);
    std::vector<const Matrix*> cptrs(ptrs.begin(), ptrs.end());
    state = AdaBeliefState::zeros_like(cptrs);
  }
  void step(const std::vector<Matrix>& grads, const AdaBeliefHyper& h = {}) { adabelief_step(ptrs, grads, state, h); }
};

TEST(AdaBelief, ZeroGradientFromFreshStateLeavesParams) {
  Problem p({Matrix::Constant(2, 3, 0.7)});
  p.step({Matrix::Zero(2, 3)});
  EXPECT_EQ(p.params[0], Matrix::Constant(2, 3, 0.7));
  EXPECT_EQ(p.state.step, 1u);
}

TEST(AdaBelief, FirstStepMatchesClosedForm) {
  Problem p({Matrix::Zero(1, 1)});
  p.step({Matrix::Ones(1, 1)});
  // m = 0.02, s = 0.02·0.98² + 1e-8; bias corrections divide by 0.02.
  const double s_hat = (0.02 * 0.98 * 0.98 + 1e-8) / 0.02;
  EXPECT_NEAR(p.params[0](0, 0), -1e-3 / (std::sqrt(s_hat) + 1e-8), 1e-18);
  EXPECT_NEAR(p.params[0](0, 0), -1e-3 / 0.98, 1e-9);
}

TEST(AdaBelief, MatchesScalarRecurrence) {
  Rng rng(1);
  Problem p({Matrix::Zero(1, 1)});
  AdaBeliefHyper h;
  h.learning_rate = 0.01;
  h.beta1 = 0.9;
  h.beta2 = 0.95;
  double theta = 0, m = 0, s = 0;
  for (int t = 1; t <= 50; ++t) {
    const double g = rng.normal();
    p.step({Matrix::Constant(1, 1, g)}, h);
    m = h.beta1 * m + (1 - h.beta1) * g;
    s = h.beta2 * s + (1 - h.beta2) * (g - m) * (g - m) + h.eps;
    theta -= h.learning_rate * (m / (1 - std::pow(h.beta1, t))) / (std::sqrt(s / (1 - std::pow(h.beta2, t))) + h.eps);
    EXPECT_NEAR(p.params[0](0, 0), theta, 1e-14);
  }
  EXPECT_EQ(p.state.step, 50u);
}

TEST(AdaBelief, IdenticalRunsAreBitIdentical) {
  auto run = [] {
    Rng rng(2);
    Problem p({Matrix::Ones(3, 3), Matrix::Zero(1, 4)});
    for (int t = 0; t < 20; ++t) {
      Matrix g0(3, 3), g1(1, 4);
      for (Eigen::Index i = 0; i < 9; ++i) g0.data()[i] = rng.normal();
      for (Eigen::Index i = 0; i < 4; ++i) g1.data()[i] = rng.normal();
      p.step({g0, g1});
    }
    return p.params;
  };
  const auto a = run(), b = run();
  EXPECT_TRUE(test::bit_equal(a[0], b[0]));
  EXPECT_TRUE(test::bit_equal(a[1], b[1]));
}

TEST(AdaBelief, NonFiniteGradientLeavesEverythingUntouched) {
  Problem p({Matrix::Constant(1, 2, 0.5), Matrix::Constant(1, 1, 2.0)});
  p.step({Matrix::Ones(1, 2), Matrix::Ones(1, 1)});
  const auto params = p.params;
  const AdaBeliefState state = p.state;
  Matrix bad = Matrix::Ones(1, 1);
  bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(p.step({Matrix::Ones(1, 2), bad}), NonFiniteGradient);
  EXPECT_TRUE(test::bit_equal(p.params[0], params[0]));
  EXPECT_TRUE(test::bit_equal(p.params[1], params[1]));
  EXPECT_TRUE(test::bit_equal(p.state.m[0], state.m[0]));
  EXPECT_TRUE(test::bit_equal(p.state.s[1], state.s[1]));
  EXPECT_EQ(p.state.step, state.step);
}

TEST(AdaBelief, ShapeMismatchThrows) {
  Problem p({Matrix::Zero(2, 2)});
  EXPECT_THROW(p.step({Matrix::Zero(2, 3)}), std::invalid_argument);
  EXPECT_THROW(p.step({}), std::invalid_argument);
}

}  // namespace
}  // namespace idstyle
