#pragma once

#include <cstdint>
#include <vector>

#include "poseadapt/tensor.hpp"

namespace poseadapt {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
};

// K per-keypoint score grids stored position-major: maps is a (H*W) x K
// matrix whose rows scan the grid row-major. stride maps heatmap cells back
// to image pixels.
struct HeatmapSet {
  Tensor maps;
  int height = 0;
  int width = 0;
  int stride = 1;
};

// Unnormalized Gaussian bump per visible keypoint, peak exactly 1 at the
// keypoint's grid cell; invisible keypoints yield all-zero maps. Keypoints
// are in image pixels, sigma in heatmap cells.
HeatmapSet render_heatmaps(const std::vector<Keypoint>& keypoints,
                           const std::vector<uint8_t>& visibility, int height, int width,
                           int stride, double sigma);

struct DecodedKeypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;
};

// Argmax cell per map, mapped back to image pixels; ties break to the lowest
// linear index; confidence is the peak value clamped into [0, 1].
std::vector<DecodedKeypoint> decode_keypoints(const HeatmapSet& maps);

// Sum over visible keypoints of squared L2 distance between predicted and
// target maps, averaged over the batch. Invisible keypoints are excluded.
Tensor mse_pose_loss(const std::vector<HeatmapSet>& pred, const std::vector<HeatmapSet>& target,
                     const std::vector<std::vector<uint8_t>>& visibility);

}  // namespace poseadapt
