#include "poseadapt/isa.hpp"

#include <stdexcept>

namespace poseadapt {

Tensor heatmap_alignment_loss(const std::vector<Tensor>& labeled,
                              const std::vector<Tensor>& unlabeled) {
  if (labeled.empty() || unlabeled.empty()) {
    throw std::invalid_argument("heatmap_alignment_loss: empty batch");
  }
  const auto dims = labeled[0].dims();
  for (const auto& t : labeled) {
    if (t.dims() != dims) throw std::invalid_argument("heatmap_alignment_loss: dims mismatch");
  }
  for (const auto& t : unlabeled) {
    if (t.dims() != dims) throw std::invalid_argument("heatmap_alignment_loss: dims mismatch");
  }
  const int k = dims[1];

  // keypoint-major views so each keypoint map is a contiguous row
  std::vector<Tensor> lab, unlab;
  lab.reserve(labeled.size());
  unlab.reserve(unlabeled.size());
  for (const auto& t : labeled) lab.push_back(transpose2d(t));
  for (const auto& t : unlabeled) unlab.push_back(transpose2d(t));

  Tensor total = Tensor::scalar(0.0);
  for (const auto& a : lab) {
    for (const auto& b : unlab) {
      for (int h = 0; h < k; ++h) {
        total = add(total, cosine_similarity(row(a, h), row(b, h)));
      }
    }
  }
  const double pairs = static_cast<double>(labeled.size()) * unlabeled.size() * k;
  // 1 - mean similarity, so minimizing aligns
  return add_c(mul_c(total, -1.0 / pairs), 1.0);
}

Tensor entropy_loss(const std::vector<Tensor>& unlabeled) {
  if (unlabeled.empty()) throw std::invalid_argument("entropy_loss: empty batch");
  Tensor total = Tensor::scalar(0.0);
  for (const auto& maps : unlabeled) {
    auto p = softmax(transpose2d(maps), 1);  // per-keypoint spatial distribution
    total = add(total, mul_c(sum(plogp(p)), -1.0));
  }
  return mul_c(total, 1.0 / static_cast<double>(unlabeled.size()));
}

}  // namespace poseadapt
