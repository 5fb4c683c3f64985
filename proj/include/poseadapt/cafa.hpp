#pragma once

#include <utility>
#include <vector>

#include "poseadapt/optim.hpp"
#include "poseadapt/rng.hpp"
#include "poseadapt/tensor.hpp"

namespace poseadapt {

// Cross-attentive feature alignment. Feature maps are (h*w) x C position
// matrices. A correlation map between a source and a target sample scores
// every position pair; softmax in each direction yields the attention used
// to mix the other domain's context back into each map.
struct CafaConfig {
  int channels = 32;       // must match the encoder output
  int proj_channels = 16;  // bottleneck for the correlation projections
};

// Projection weights plus the learnable mixing scalars lambda_s, lambda_t.
// Both lambdas start at 0 so enhancement begins as the identity; the trainer
// clamps them to >= 0 after each optimizer step.
void add_cafa_params(ParamSet& params, const CafaConfig& cfg, Rng& rng);

// phi[i][j] = <proj_a(f_s) row i, proj_b(f_t) row j>
Tensor correlation_map(const ParamSet& params, const Tensor& f_s, const Tensor& f_t);

// Row-stochastic source-to-target attention: row i sums to 1 over target
// positions j.
Tensor sta_attend(const Tensor& phi);

// Column-stochastic target-to-source attention: column j sums to 1 over
// source positions i.
Tensor tsa_attend(const Tensor& phi);

// f + lambda * (attention_rows * context); each attention row is a convex
// combination over context positions. lambda == 0 returns f exactly.
Tensor enhance_features(const Tensor& f, const Tensor& context, const Tensor& attention_rows,
                        const Tensor& lambda);

// Full bidirectional pass for one sample pair: returns (f_s', f_t').
std::pair<Tensor, Tensor> cafa_enhance(const ParamSet& params, const Tensor& f_s,
                                       const Tensor& f_t);

// Global average over positions, the vector fed into the MMD kernel.
Tensor pooled_features(const Tensor& f);

enum class MmdKernel {
  kRbf,     // exp(-|x-y|^2 / (2 sigma^2)), sigma^2 = median pairwise squared
            // distance of the pooled batches, treated as a constant
  kLinear,  // <x, y>; equals |mean_s - mean_t|^2 in the biased estimator
};

// Median pairwise squared distance over the pooled batches (1.0 when all
// points coincide). This is the RBF sigma^2.
double mmd_median_bandwidth(const std::vector<Tensor>& batch_s,
                            const std::vector<Tensor>& batch_t);

// Biased squared-MMD estimator over two batches of equal-dimension vectors.
// sigma2 <= 0 recomputes the median bandwidth from the batches; either way
// the bandwidth is a constant for differentiation purposes.
Tensor mmd_loss(const std::vector<Tensor>& batch_s, const std::vector<Tensor>& batch_t,
                MmdKernel kernel = MmdKernel::kRbf, double sigma2 = 0.0);

}  // namespace poseadapt
