#pragma once

#include "poseadapt/dataset.hpp"
#include "poseadapt/rng.hpp"
#include "poseadapt/skeleton.hpp"

namespace poseadapt {

struct AugmentConfig {
  bool enabled = true;
  double flip_prob = 0.5;
  double scale_min = 0.7;
  double scale_max = 1.3;
  double rotation_deg = 40.0;  // uniform in [-rotation_deg, +rotation_deg]
};

// Horizontal flip (with left/right joint swap), rotation and scale about the
// image center, applied consistently to pixels and keypoints. Joints pushed
// out of frame become invisible; if no joint survives, the sample is
// returned unaugmented. guard_frame=false skips that fallback so batches
// whose annotations must not influence training (unlabeled roles) transform
// unconditionally; the rng draws are identical either way.
PoseSample augment(const PoseSample& sample, const SkeletonGraph& skeleton, Rng& rng,
                   const AugmentConfig& cfg, bool guard_frame = true);

}  // namespace poseadapt
