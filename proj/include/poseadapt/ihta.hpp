#pragma once

#include <utility>
#include <vector>

#include "poseadapt/heatmap.hpp"
#include "poseadapt/optim.hpp"
#include "poseadapt/rng.hpp"
#include "poseadapt/skeleton.hpp"
#include "poseadapt/tensor.hpp"

namespace poseadapt {

// Inter-domain human-topology alignment: pools per-keypoint features out of
// the feature map, runs them through a graph-convolution stack over the
// skeleton, gates cross-domain pose pairs by similarity, and aligns the
// topology representations of the selected pairs.

struct GcnConfig {
  int in_channels = 32;   // keypoint feature dimension (encoder channels)
  int hidden = 64;        // SemGConv channels
  int blocks = 2;         // each block: two SemGConv layers + one non-local
  int out_channels = 32;  // topology representation dimension
};

struct KeypointFeatures {
  Tensor features;                   // K x C, one row per keypoint
  std::vector<double> confidences;   // per-keypoint peak in [0, 1]
};

// v_i = spatial average of the feature map weighted by heatmap i. Heatmaps
// are average-pooled down to the feature grid when resolutions differ.
KeypointFeatures extract_keypoint_features(const Tensor& features, const HeatmapSet& maps,
                                           int feature_h, int feature_w);

// Graph convolution with a learnable per-output-channel edge weighting mask,
// softmax-normalized over each node's skeleton neighbors (self included),
// followed by ReLU. weight: D_in x D_out, masks: D_out x K x K.
Tensor semgconv_forward(const Tensor& nodes, const SkeletonGraph& graph, const Tensor& weight,
                        const Tensor& masks);

// Residual all-pairs attention over nodes:
//   v_i' = v_i + (1/K) * sum_j softmax_j(<theta v_i, phi v_j>) g(v_j) W_out
// W_out starts at zero, so the layer is the identity at initialization.
Tensor nonlocal_forward(const Tensor& nodes, const Tensor& theta_w, const Tensor& phi_w,
                        const Tensor& g_w, const Tensor& out_w);

void add_gcn_params(ParamSet& params, const GcnConfig& cfg, const SkeletonGraph& graph,
                    Rng& rng);

// Full stack: blocks of (SemGConv, SemGConv, non-local) then a 1x1
// projection to the topology representation, K x out_channels.
Tensor gcn_forward(const ParamSet& params, const GcnConfig& cfg, const SkeletonGraph& graph,
                   const Tensor& keypoint_features);

// The masked mask-softmax depends only on the masks, not on the node
// features, so a batch shares one evaluation per layer. Build once per step
// (after any mask update), then run forward per sample.
class GcnBatchContext {
 public:
  GcnBatchContext(const ParamSet& params, const GcnConfig& cfg, const SkeletonGraph& graph);
  Tensor forward(const Tensor& keypoint_features) const;

 private:
  const ParamSet& params_;
  GcnConfig cfg_;
  const SkeletonGraph& graph_;
  std::vector<std::shared_ptr<const std::vector<double>>> layer_softmax_;
};

// Confidence-weighted mean absolute difference of the L2-normalized keypoint
// features, mapped through exp(-x) so 1 means identical and the pair gate
// threshold keeps its printed value.
double pair_similarity(const KeypointFeatures& a, const KeypointFeatures& b);

// All cross-domain pairs with similarity >= tau, source-index major.
// tau must lie in (0, 1].
std::vector<std::pair<int, int>> select_pairs(const std::vector<KeypointFeatures>& batch_s,
                                              const std::vector<KeypointFeatures>& batch_t,
                                              double tau);

// Mean over selected pairs and keypoints of 1 - cosine of the topology
// representations; 0 when no pair was selected.
Tensor topology_alignment_loss(const std::vector<Tensor>& reps_s,
                               const std::vector<Tensor>& reps_t,
                               const std::vector<std::pair<int, int>>& pairs);

}  // namespace poseadapt
