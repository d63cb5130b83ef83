#pragma once

#include "idstyle/autodiff.hpp"

namespace idstyle {

/// Dense row-major 64-bit matrix used for every model quantity.
using Matrix = ad::Tensor<double>;
using Graph = ad::Graph<double>;
using Var = ad::Var<double>;

}  // namespace idstyle
