#include "poseadapt/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace poseadapt {

PckReport pck(const std::vector<std::vector<DecodedKeypoint>>& preds,
              const std::vector<const PoseSample*>& truths, double threshold,
              const std::string& normalizer, const SkeletonGraph& skeleton) {
  if (preds.size() != truths.size()) {
    throw std::invalid_argument("pck: prediction/ground-truth count mismatch");
  }
  if (normalizer != "bbox_diag" && normalizer != "head") {
    throw std::invalid_argument("pck: unknown normalizer " + normalizer);
  }
  const int k = skeleton.num_joints;
  PckReport report;
  report.threshold = threshold;
  report.normalizer = normalizer;
  report.per_joint.assign(k, 0.0);
  report.evaluated.assign(k, 0);
  std::vector<int> correct(k, 0);

  for (size_t s = 0; s < preds.size(); ++s) {
    const PoseSample& gt = *truths[s];
    if (static_cast<int>(preds[s].size()) != k ||
        static_cast<int>(gt.keypoints.size()) != k) {
      throw std::invalid_argument("pck: joint count mismatch");
    }

    double norm = 0.0;
    if (normalizer == "head") {
      const auto [a, b] = skeleton.head_segment;
      if (a < 0 || !gt.visibility[a] || !gt.visibility[b]) {
        ++report.skipped;
        continue;
      }
      norm = std::hypot(gt.keypoints[a].x - gt.keypoints[b].x,
                        gt.keypoints[a].y - gt.keypoints[b].y);
    } else {
      double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
      bool any = false;
      for (int i = 0; i < k; ++i) {
        if (!gt.visibility[i]) continue;
        any = true;
        min_x = std::min(min_x, gt.keypoints[i].x);
        max_x = std::max(max_x, gt.keypoints[i].x);
        min_y = std::min(min_y, gt.keypoints[i].y);
        max_y = std::max(max_y, gt.keypoints[i].y);
      }
      if (any) norm = std::hypot(max_x - min_x, max_y - min_y);
    }
    if (norm <= 0.0) {
      ++report.skipped;
      continue;
    }

    for (int i = 0; i < k; ++i) {
      if (!gt.visibility[i]) continue;
      ++report.evaluated[i];
      const double err = std::hypot(preds[s][i].x - gt.keypoints[i].x,
                                    preds[s][i].y - gt.keypoints[i].y);
      if (err <= threshold * norm) ++correct[i];
    }
  }

  int joints_seen = 0;
  for (int i = 0; i < k; ++i) {
    if (report.evaluated[i] > 0) {
      report.per_joint[i] = static_cast<double>(correct[i]) / report.evaluated[i];
      report.total += report.per_joint[i];
      ++joints_seen;
    }
  }
  if (joints_seen > 0) report.total /= joints_seen;
  return report;
}

}  // namespace poseadapt
