#include "poseadapt/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace poseadapt {

Tensor& ParamSet::add(const std::string& name, Tensor t) {
  if (contains(name)) throw std::invalid_argument("ParamSet: duplicate name " + name);
  items_.emplace_back(name, std::move(t));
  return items_.back().second;
}

Tensor& ParamSet::at(const std::string& name) {
  for (auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw std::out_of_range("ParamSet: no parameter named " + name);
}

const Tensor& ParamSet::at(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return t;
  }
  throw std::out_of_range("ParamSet: no parameter named " + name);
}

bool ParamSet::contains(const std::string& name) const {
  for (const auto& [n, t] : items_) {
    if (n == name) return true;
  }
  return false;
}

void ParamSet::zero_grad() {
  for (auto& [n, t] : items_) t.zero_grad();
}

int64_t ParamSet::total_elements() const {
  int64_t total = 0;
  for (const auto& [n, t] : items_) total += t.numel();
  return total;
}

Tensor init_uniform(std::vector<int> dims, int fan_in, Rng& rng) {
  if (fan_in <= 0) throw std::invalid_argument("init_uniform: fan_in must be positive");
  const double bound = std::sqrt(1.0 / fan_in);
  int64_t n = 1;
  for (int d : dims) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.uniform(-bound, bound);
  return Tensor::from_data(std::move(dims), std::move(data), true);
}

AdamState AdamState::for_params(const ParamSet& params) {
  AdamState s;
  s.m.resize(params.size());
  s.v.resize(params.size());
  for (size_t i = 0; i < params.size(); ++i) {
    s.m[i].assign(params.tensor(i).numel(), 0.0);
    s.v[i].assign(params.tensor(i).numel(), 0.0);
  }
  return s;
}

void adam_step_buffer(std::span<double> param, std::span<const double> grad,
                      std::span<double> m, std::span<double> v, int64_t step,
                      const AdamConfig& cfg) {
  if (param.size() != grad.size() || param.size() != m.size() || param.size() != v.size()) {
    throw std::invalid_argument("adam_step: buffer size mismatch");
  }
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (size_t i = 0; i < param.size(); ++i) {
    if (!std::isfinite(grad[i])) throw std::runtime_error("adam_step: non-finite gradient");
    const double g = grad[i] + cfg.weight_decay * param[i];
    m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
    v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = m[i] / bc1;
    const double vhat = v[i] / bc2;
    param[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void adam_step(ParamSet& params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam_step: state does not match parameter set");
  }
  ++state.step;
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& t = params.tensor(i);
    auto g = t.grad();
    if (g.empty()) continue;  // parameter did not participate in this graph
    adam_step_buffer(t.mutable_data(), g, state.m[i], state.v[i], state.step, cfg);
  }
}

}  // namespace poseadapt
