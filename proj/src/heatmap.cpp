#include "poseadapt/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poseadapt {

HeatmapSet render_heatmaps(const std::vector<Keypoint>& keypoints,
                           const std::vector<uint8_t>& visibility, int height, int width,
                           int stride, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("render_heatmaps: sigma must be positive");
  if (keypoints.size() != visibility.size()) {
    throw std::invalid_argument("render_heatmaps: keypoint/visibility count mismatch");
  }
  const int k = static_cast<int>(keypoints.size());
  std::vector<double> maps(static_cast<size_t>(height) * width * k, 0.0);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int i = 0; i < k; ++i) {
    if (!visibility[i]) continue;
    const int cx = std::clamp(static_cast<int>(std::lround(keypoints[i].x / stride)), 0, width - 1);
    const int cy = std::clamp(static_cast<int>(std::lround(keypoints[i].y / stride)), 0, height - 1);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        const double d2 = static_cast<double>(x - cx) * (x - cx) +
                          static_cast<double>(y - cy) * (y - cy);
        maps[(static_cast<size_t>(y) * width + x) * k + i] = std::exp(-d2 * inv);
      }
    }
  }
  HeatmapSet out;
  out.maps = Tensor::from_data({height * width, k}, std::move(maps));
  out.height = height;
  out.width = width;
  out.stride = stride;
  return out;
}

std::vector<DecodedKeypoint> decode_keypoints(const HeatmapSet& maps) {
  const int k = maps.maps.dims()[1];
  const int cells = maps.maps.dims()[0];
  auto data = maps.maps.data();
  std::vector<DecodedKeypoint> out(k);
  for (int i = 0; i < k; ++i) {
    double best = data[i];
    int best_pos = 0;
    for (int p = 1; p < cells; ++p) {
      const double v = data[static_cast<size_t>(p) * k + i];
      if (v > best) {
        best = v;
        best_pos = p;
      }
    }
    out[i].x = static_cast<double>(best_pos % maps.width) * maps.stride;
    out[i].y = static_cast<double>(best_pos / maps.width) * maps.stride;
    out[i].confidence = std::clamp(best, 0.0, 1.0);
  }
  return out;
}

Tensor mse_pose_loss(const std::vector<HeatmapSet>& pred, const std::vector<HeatmapSet>& target,
                     const std::vector<std::vector<uint8_t>>& visibility) {
  if (pred.empty() || pred.size() != target.size() || pred.size() != visibility.size()) {
    throw std::invalid_argument("mse_pose_loss: batch size mismatch");
  }
  Tensor total = Tensor::scalar(0.0);
  for (size_t b = 0; b < pred.size(); ++b) {
    if (pred[b].maps.dims() != target[b].maps.dims()) {
      throw std::invalid_argument("mse_pose_loss: map shape mismatch");
    }
    const int cells = pred[b].maps.dims()[0];
    const int k = pred[b].maps.dims()[1];
    if (static_cast<int>(visibility[b].size()) != k) {
      throw std::invalid_argument("mse_pose_loss: visibility length mismatch");
    }
    std::vector<double> mask(static_cast<size_t>(cells) * k, 0.0);
    bool any = false;
    for (int i = 0; i < k; ++i) {
      if (!visibility[b][i]) continue;
      any = true;
      for (int p = 0; p < cells; ++p) mask[static_cast<size_t>(p) * k + i] = 1.0;
    }
    if (!any) continue;
    auto diff = sub(pred[b].maps, target[b].maps);
    auto sq = mul(diff, diff);
    total = add(total, sum(mul(sq, Tensor::from_data({cells, k}, std::move(mask)))));
  }
  return mul_c(total, 1.0 / static_cast<double>(pred.size()));
}

}  // namespace poseadapt
