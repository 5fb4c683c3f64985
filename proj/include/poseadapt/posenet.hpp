#pragma once

#include <utility>

#include "poseadapt/heatmap.hpp"
#include "poseadapt/optim.hpp"
#include "poseadapt/rng.hpp"
#include "poseadapt/tensor.hpp"

namespace poseadapt {

// Small strided encoder-decoder heatmap estimator. Two patch-linear encoder
// stages downscale 4x to the feature map; two decoder stages upscale back to
// heatmaps at half the input resolution. The feature map is exposed between
// the stages so cross-domain enhancement can run before decoding.
struct PoseNetConfig {
  int in_channels = 3;
  int image_size = 64;
  int enc_hidden = 16;   // channels after the first stage
  int channels = 32;     // feature channels C
  int dec_hidden = 32;
  int num_keypoints = 16;
  double sigma = 1.5;    // target Gaussian width, in heatmap cells

  int feature_size() const { return image_size / 4; }
  int heatmap_size() const { return image_size / 2; }
  int heatmap_stride() const { return image_size / heatmap_size(); }
  int feature_positions() const { return feature_size() * feature_size(); }
};

// Appends the network's named parameters (seeded init) to the set.
void add_posenet_params(ParamSet& params, const PoseNetConfig& cfg, Rng& rng);

// Image is a C x H x W tensor; returns the (h*w) x C feature map.
Tensor posenet_encode(const ParamSet& params, const PoseNetConfig& cfg, const Tensor& image);

// Decodes a (possibly enhanced) feature map into heatmaps.
HeatmapSet posenet_decode(const ParamSet& params, const PoseNetConfig& cfg,
                          const Tensor& features);

// Plain inference path: encode then decode the raw features.
std::pair<Tensor, HeatmapSet> posenet_forward(const ParamSet& params, const PoseNetConfig& cfg,
                                              const Tensor& image);

}  // namespace poseadapt
