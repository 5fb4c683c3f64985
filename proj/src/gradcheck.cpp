#include "poseadapt/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace poseadapt {

double grad_check(const std::function<Tensor()>& scalar_fn, ParamSet& params, double eps) {
  if (eps < 1e-7 || eps > 1e-3) {
    throw std::invalid_argument("grad_check: eps outside [1e-7, 1e-3]");
  }

  params.zero_grad();
  Tensor out = scalar_fn();
  const double v0 = out.value();
  if (scalar_fn().value() != v0) {
    throw std::runtime_error("grad_check: function is not deterministic");
  }
  out.backward();

  // snapshot analytic gradients; params without a grad buffer saw no use
  std::vector<std::vector<double>> analytic(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    auto g = params.tensor(i).grad();
    analytic[i].assign(g.begin(), g.end());
    for (double x : analytic[i]) {
      if (!std::isfinite(x)) throw std::runtime_error("grad_check: non-finite gradient");
    }
  }

  double max_err = 0.0;
  for (size_t i = 0; i < params.size(); ++i) {
    auto data = params.tensor(i).mutable_data();
    for (size_t j = 0; j < data.size(); ++j) {
      const double saved = data[j];
      data[j] = saved + eps;
      const double fp = scalar_fn().value();
      data[j] = saved - eps;
      const double fm = scalar_fn().value();
      data[j] = saved;
      const double fd = (fp - fm) / (2.0 * eps);
      const double a = analytic[i].empty() ? 0.0 : analytic[i][j];
      const double err = std::abs(a - fd) / std::max(1.0, std::abs(fd));
      max_err = std::max(max_err, err);
    }
  }
  return max_err;
}

}  // namespace poseadapt
