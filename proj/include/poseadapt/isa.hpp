#pragma once

#include <vector>

#include "poseadapt/tensor.hpp"

namespace poseadapt {

// Intra-domain structure adaptation (semi-supervised setting only). Both
// losses consume predicted heatmaps as (H*W) x K position matrices; keypoint
// h of a sample is the h-th column.

// Mean over all labeled x unlabeled pairs and keypoints of
// 1 - cosine(labeled map h, unlabeled map h). All-zero maps count as
// maximally dissimilar (contribution 1). Result lies in [0, 2].
Tensor heatmap_alignment_loss(const std::vector<Tensor>& labeled,
                              const std::vector<Tensor>& unlabeled);

// Shannon entropy (natural log) of the spatial softmax of every keypoint
// map, summed over keypoints and averaged over the batch.
Tensor entropy_loss(const std::vector<Tensor>& unlabeled);

}  // namespace poseadapt
