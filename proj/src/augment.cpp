#include "poseadapt/augment.hpp"

#include <algorithm>
#include <cmath>

namespace poseadapt {

PoseSample augment(const PoseSample& sample, const SkeletonGraph& skeleton, Rng& rng,
                   const AugmentConfig& cfg, bool guard_frame) {
  if (!cfg.enabled) return sample;

  const bool flip = rng.bernoulli(cfg.flip_prob);
  const double angle = rng.uniform(-cfg.rotation_deg, cfg.rotation_deg) * 3.14159265358979323846 / 180.0;
  const double s = rng.uniform(cfg.scale_min, cfg.scale_max);

  const int w = sample.image.width, h = sample.image.height, ch = sample.image.channels;
  const double cx = (w - 1) * 0.5, cy = (h - 1) * 0.5;
  const double ca = std::cos(angle), sa = std::sin(angle);

  // forward map for annotations: flip, then rotate+scale about the center
  auto map_point = [&](Keypoint p) {
    if (flip) p.x = (w - 1) - p.x;
    const double dx = p.x - cx, dy = p.y - cy;
    return Keypoint{cx + s * (ca * dx - sa * dy), cy + s * (sa * dx + ca * dy)};
  };

  PoseSample out = sample;
  const int k = static_cast<int>(sample.keypoints.size());
  int in_frame = 0;
  for (int i = 0; i < k; ++i) {
    out.keypoints[i] = map_point(sample.keypoints[i]);
    const bool inside = out.keypoints[i].x >= 0 && out.keypoints[i].x <= w - 1 &&
                        out.keypoints[i].y >= 0 && out.keypoints[i].y <= h - 1;
    out.visibility[i] = (sample.visibility[i] && inside) ? 1 : 0;
    in_frame += inside ? 1 : 0;
  }
  if (guard_frame && in_frame == 0) return sample;

  if (flip) {
    for (auto [a, b] : skeleton.flip_pairs) {
      std::swap(out.keypoints[a], out.keypoints[b]);
      std::swap(out.visibility[a], out.visibility[b]);
    }
  }

  // inverse warp with edge-clamped bilinear sampling
  const double inv_s = 1.0 / s;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx, dy = y - cy;
      double sx = cx + inv_s * (ca * dx + sa * dy);
      double sy = cy + inv_s * (-sa * dx + ca * dy);
      if (flip) sx = (w - 1) - sx;
      const double fx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
      const double fy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
      const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
      const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
      const double ax = fx - x0, ay = fy - y0;
      for (int c = 0; c < ch; ++c) {
        const double v00 = sample.image.at(c, y0, x0), v01 = sample.image.at(c, y0, x1);
        const double v10 = sample.image.at(c, y1, x0), v11 = sample.image.at(c, y1, x1);
        const double v = (1 - ay) * ((1 - ax) * v00 + ax * v01) +
                         ay * ((1 - ax) * v10 + ax * v11);
        out.image.at(c, y, x) = static_cast<float>(v);
      }
    }
  }
  return out;
}

}  // namespace poseadapt
