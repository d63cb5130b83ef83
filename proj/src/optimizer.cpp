#include "idstyle/optimizer.hpp"

#include <cmath>
#include <string>

namespace idstyle {

AdaBeliefState AdaBeliefState::zeros_like(std::span<const Matrix* const> params) {
  AdaBeliefState st;
  for (const Matrix* p : params) {
    st.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    st.s.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return st;
}

void adabelief_step(std::span<Matrix* const> params, std::span<const Matrix> grads, AdaBeliefState& state,
                    const AdaBeliefHyper& hyper) {
  if (grads.size() != params.size() || state.m.size() != params.size() || state.s.size() != params.size()) {
    throw std::invalid_argument("adabelief_step: parameter, gradient and state counts differ");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (grads[k].rows() != params[k]->rows() || grads[k].cols() != params[k]->cols() ||
        state.m[k].rows() != params[k]->rows() || state.m[k].cols() != params[k]->cols()) {
      throw std::invalid_argument("adabelief_step: shape mismatch for tensor " + std::to_string(k));
    }
    if (!grads[k].allFinite()) {
      throw NonFiniteGradient("adabelief_step: non-finite gradient in tensor " + std::to_string(k) + " at step " +
                              std::to_string(state.step + 1));
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto g = grads[k].array();
    auto m = state.m[k].array();
    auto s = state.s[k].array();
    m = hyper.beta1 * m + (1.0 - hyper.beta1) * g;
    s = hyper.beta2 * s + (1.0 - hyper.beta2) * (g - m).square() + hyper.eps;
    params[k]->array() -= hyper.learning_rate * (m / c1) / ((s / c2).sqrt() + hyper.eps);
  }
}

}  // namespace idstyle
