#pragma once

#include <functional>

#include "poseadapt/optim.hpp"
#include "poseadapt/tensor.hpp"

namespace poseadapt {

// Compares reverse-mode gradients of a scalar function against central
// finite differences over every entry of every parameter.
//
// Returns max over entries of |analytic - fd| / max(1, |fd|). The function
// must be deterministic: two forward evaluations that disagree bitwise are
// an error, as is a non-finite analytic gradient.
double grad_check(const std::function<Tensor()>& scalar_fn, ParamSet& params,
                  double eps = 1e-5);

}  // namespace poseadapt
