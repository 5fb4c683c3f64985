#pragma once

#include <string>
#include <vector>

#include "poseadapt/rng.hpp"
#include "poseadapt/tensor.hpp"

namespace poseadapt {

// Ordered, named collection of trainable leaves. Order is the serialization
// and optimizer-state order, so it must be construction-deterministic.
class ParamSet {
 public:
  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  size_t size() const { return items_.size(); }
  const std::string& name(size_t i) const { return items_[i].first; }
  Tensor& tensor(size_t i) { return items_[i].second; }
  const Tensor& tensor(size_t i) const { return items_[i].second; }

  void zero_grad();
  int64_t total_elements() const;

 private:
  std::vector<std::pair<std::string, Tensor>> items_;
};

// Uniform init in [-sqrt(1/fan_in), +sqrt(1/fan_in)].
Tensor init_uniform(std::vector<int> dims, int fan_in, Rng& rng);

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double weight_decay = 1e-4;
  double eps = 1e-8;
};

// Per-tensor moment buffers; step counts once per optimizer step.
struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  int64_t step = 0;

  static AdamState for_params(const ParamSet& params);
};

// Bias-corrected Adam with L2 weight decay folded into the gradient.
// Updates every parameter from its accumulated .grad buffer.
void adam_step(ParamSet& params, AdamState& state, const AdamConfig& cfg);

// Single-buffer variant used by the ParamSet wrapper and directly testable.
void adam_step_buffer(std::span<double> param, std::span<const double> grad,
                      std::span<double> m, std::span<double> v, int64_t step,
                      const AdamConfig& cfg);

}  // namespace poseadapt
