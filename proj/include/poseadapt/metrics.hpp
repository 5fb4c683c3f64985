#pragma once

#include <string>
#include <vector>

#include "poseadapt/dataset.hpp"
#include "poseadapt/heatmap.hpp"
#include "poseadapt/skeleton.hpp"

namespace poseadapt {

struct PckReport {
  std::vector<double> per_joint;    // accuracy per joint over evaluated instances
  std::vector<int> evaluated;       // instances counted per joint
  double total = 0.0;               // mean over joints with at least one instance
  double threshold = 0.2;
  std::string normalizer = "bbox_diag";
  int skipped = 0;                  // samples dropped for a zero normalizer
};

// A joint is correct when its L2 error is <= threshold * normalizer
// (inclusive). Invisible ground-truth joints are excluded. Normalizers:
// "bbox_diag" (diagonal of the visible-keypoint bounding box) or "head"
// (the skeleton's head segment length, the PCKh convention).
PckReport pck(const std::vector<std::vector<DecodedKeypoint>>& preds,
              const std::vector<const PoseSample*>& truths, double threshold,
              const std::string& normalizer, const SkeletonGraph& skeleton);

}  // namespace poseadapt
