#include "poseadapt/cafa.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poseadapt {

void add_cafa_params(ParamSet& params, const CafaConfig& cfg, Rng& rng) {
  const int c = cfg.channels, cp = cfg.proj_channels;
  params.add("cafa.proj_a.w", init_uniform({c, cp}, c, rng));
  params.add("cafa.proj_b.w", init_uniform({c, cp}, c, rng));
  params.add("cafa.ctx_s.w", init_uniform({c, c}, c, rng));
  params.add("cafa.ctx_t.w", init_uniform({c, c}, c, rng));
  params.add("cafa.lambda_s", Tensor::zeros({1}, true));
  params.add("cafa.lambda_t", Tensor::zeros({1}, true));
}

Tensor correlation_map(const ParamSet& params, const Tensor& f_s, const Tensor& f_t) {
  if (f_s.dims()[0] != f_t.dims()[0]) {
    throw std::invalid_argument("correlation_map: spatial dims mismatch");
  }
  auto a = matmul(f_s, params.at("cafa.proj_a.w"));
  auto b = matmul(f_t, params.at("cafa.proj_b.w"));
  return matmul(a, transpose2d(b));
}

Tensor sta_attend(const Tensor& phi) { return softmax(phi, 1); }

Tensor tsa_attend(const Tensor& phi) { return softmax(phi, 0); }

Tensor enhance_features(const Tensor& f, const Tensor& context, const Tensor& attention_rows,
                        const Tensor& lambda) {
  if (attention_rows.dims()[0] != f.dims()[0] ||
      attention_rows.dims()[1] != context.dims()[0] || context.dims()[1] != f.dims()[1]) {
    throw std::invalid_argument("enhance_features: incompatible dims");
  }
  if (lambda.data()[0] == 0.0 && !lambda.requires_grad()) {
    return f;  // exact identity, no graph growth
  }
  return add(f, scale(matmul(attention_rows, context), lambda));
}

std::pair<Tensor, Tensor> cafa_enhance(const ParamSet& params, const Tensor& f_s,
                                       const Tensor& f_t) {
  auto phi = correlation_map(params, f_s, f_t);
  auto ctx_s = matmul(f_s, params.at("cafa.ctx_s.w"));
  auto ctx_t = matmul(f_t, params.at("cafa.ctx_t.w"));
  auto enhanced_s =
      enhance_features(f_s, ctx_t, sta_attend(phi), params.at("cafa.lambda_s"));
  auto enhanced_t = enhance_features(f_t, ctx_s, transpose2d(tsa_attend(phi)),
                                     params.at("cafa.lambda_t"));
  return {enhanced_s, enhanced_t};
}

Tensor pooled_features(const Tensor& f) {
  const int positions = f.dims()[0], c = f.dims()[1];
  auto weights = Tensor::full({1, positions}, 1.0 / positions);
  return reshape(matmul(weights, f), {c});
}

double mmd_median_bandwidth(const std::vector<Tensor>& batch_s,
                            const std::vector<Tensor>& batch_t) {
  std::vector<const Tensor*> all;
  for (const auto& t : batch_s) all.push_back(&t);
  for (const auto& t : batch_t) all.push_back(&t);
  std::vector<double> d2;
  for (size_t i = 0; i < all.size(); ++i) {
    for (size_t j = i + 1; j < all.size(); ++j) {
      auto a = all[i]->data(), b = all[j]->data();
      double s = 0.0;
      for (size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
      d2.push_back(s);
    }
  }
  if (d2.empty()) return 1.0;
  std::sort(d2.begin(), d2.end());
  const size_t n = d2.size();
  const double med = (n % 2 == 1) ? d2[n / 2] : 0.5 * (d2[n / 2 - 1] + d2[n / 2]);
  return med > 0.0 ? med : 1.0;
}

Tensor mmd_loss(const std::vector<Tensor>& batch_s, const std::vector<Tensor>& batch_t,
                MmdKernel kernel, double sigma2) {
  if (batch_s.empty() || batch_t.empty()) {
    throw std::invalid_argument("mmd_loss: empty batch");
  }
  const auto dim = batch_s[0].dims();
  for (const auto& t : batch_s) {
    if (t.dims() != dim) throw std::invalid_argument("mmd_loss: dimension mismatch");
  }
  for (const auto& t : batch_t) {
    if (t.dims() != dim) throw std::invalid_argument("mmd_loss: dimension mismatch");
  }

  double gamma = 0.0;
  if (kernel == MmdKernel::kRbf) {
    // bandwidth from data values only; no gradient flows through it
    if (sigma2 <= 0.0) sigma2 = mmd_median_bandwidth(batch_s, batch_t);
    gamma = 1.0 / (2.0 * sigma2);
  }
  auto k = [&](const Tensor& x, const Tensor& y) {
    if (kernel == MmdKernel::kLinear) return sum(mul(x, y));
    auto d = sub(x, y);
    return vexp(mul_c(sum(mul(d, d)), -gamma));
  };

  const double ns = static_cast<double>(batch_s.size());
  const double nt = static_cast<double>(batch_t.size());
  Tensor ss = Tensor::scalar(0.0), tt = Tensor::scalar(0.0), st = Tensor::scalar(0.0);
  for (const auto& a : batch_s) {
    for (const auto& b : batch_s) ss = add(ss, k(a, b));
  }
  for (const auto& a : batch_t) {
    for (const auto& b : batch_t) tt = add(tt, k(a, b));
  }
  for (const auto& a : batch_s) {
    for (const auto& b : batch_t) st = add(st, k(a, b));
  }
  return add(add(mul_c(ss, 1.0 / (ns * ns)), mul_c(tt, 1.0 / (nt * nt))),
             mul_c(st, -2.0 / (ns * nt)));
}

}  // namespace poseadapt
