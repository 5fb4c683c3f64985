#include "poseadapt/ihta.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace poseadapt {

KeypointFeatures extract_keypoint_features(const Tensor& features, const HeatmapSet& maps,
                                           int feature_h, int feature_w) {
  if (features.rank() != 2 || features.dims()[0] != feature_h * feature_w) {
    throw std::invalid_argument("extract_keypoint_features: feature grid mismatch");
  }
  if (maps.height % feature_h != 0 || maps.width % feature_w != 0 ||
      maps.height / feature_h != maps.width / feature_w) {
    throw std::invalid_argument("extract_keypoint_features: heatmap not resamplable to grid");
  }
  const int factor = maps.height / feature_h;
  Tensor pooled = factor > 1 ? pool_positions(maps.maps, maps.height, maps.width, factor)
                             : maps.maps;
  const double inv = 1.0 / static_cast<double>(feature_h * feature_w);
  KeypointFeatures out;
  out.features = mul_c(matmul(transpose2d(pooled), features), inv);

  const int k = maps.maps.dims()[1];
  const int cells = maps.maps.dims()[0];
  auto data = maps.maps.data();
  out.confidences.resize(k);
  for (int i = 0; i < k; ++i) {
    double peak = data[i];
    for (int p = 1; p < cells; ++p) peak = std::max(peak, data[static_cast<size_t>(p) * k + i]);
    out.confidences[i] = std::clamp(peak, 0.0, 1.0);
  }
  return out;
}

namespace {

using SharedSoftmax = std::shared_ptr<const std::vector<double>>;

// adjacency-masked row softmax of every per-channel mask
SharedSoftmax masked_mask_softmax(const Tensor& masks, const SkeletonGraph& graph) {
  const int k = graph.num_joints;
  const int d_out = masks.dims()[0];
  auto soft = std::make_shared<std::vector<double>>(static_cast<size_t>(d_out) * k * k, 0.0);
  auto mdata = masks.data();
  const auto& adj = graph.adjacency;
  for (int d = 0; d < d_out; ++d) {
    const size_t mbase = static_cast<size_t>(d) * k * k;
    for (int i = 0; i < k; ++i) {
      double mx = -1e300;
      for (int j = 0; j < k; ++j) {
        if (adj[static_cast<size_t>(i) * k + j]) mx = std::max(mx, mdata[mbase + i * k + j]);
      }
      double z = 0.0;
      for (int j = 0; j < k; ++j) {
        if (!adj[static_cast<size_t>(i) * k + j]) continue;
        const double e = std::exp(mdata[mbase + i * k + j] - mx);
        (*soft)[mbase + i * k + j] = e;
        z += e;
      }
      for (int j = 0; j < k; ++j) (*soft)[mbase + i * k + j] /= z;
    }
  }
  return soft;
}

Tensor semgconv_apply(const Tensor& nodes, const SkeletonGraph& graph, const Tensor& weight,
                      const Tensor& masks, const SharedSoftmax& soft) {
  const int k = graph.num_joints;
  if (nodes.rank() != 2 || nodes.dims()[0] != k) {
    throw std::invalid_argument("semgconv: nodes must be K x D_in");
  }
  const int d_in = nodes.dims()[1];
  if (weight.rank() != 2 || weight.dims()[0] != d_in) {
    throw std::invalid_argument("semgconv: weight must be D_in x D_out");
  }
  const int d_out = weight.dims()[1];
  if (masks.dims() != std::vector<int>{d_out, k, k}) {
    throw std::invalid_argument("semgconv: masks must be D_out x K x K");
  }

  auto transformed = matmul(nodes, weight);  // K x D_out

  std::vector<double> y(static_cast<size_t>(k) * d_out, 0.0);
  auto tdata = transformed.data();
  for (int d = 0; d < d_out; ++d) {
    const size_t mbase = static_cast<size_t>(d) * k * k;
    for (int i = 0; i < k; ++i) {
      double acc = 0.0;
      for (int j = 0; j < k; ++j) {
        acc += (*soft)[mbase + i * k + j] * tdata[static_cast<size_t>(j) * d_out + d];
      }
      y[static_cast<size_t>(i) * d_out + d] = acc;
    }
  }

  const auto& adj = graph.adjacency;
  auto aggregated = make_op(
      "semgconv_attend", {k, d_out}, std::move(y), {transformed, masks},
      [soft, adj, k, d_out](detail::Node& n) {
        auto& pt = *n.parents[0];
        auto& pm = *n.parents[1];
        if (pt.requires_grad) pt.ensure_grad();
        if (pm.requires_grad) pm.ensure_grad();
        const auto& s = *soft;
        std::vector<double> ds(k);  // per-row softmax cotangent scratch
        for (int d = 0; d < d_out; ++d) {
          const size_t mbase = static_cast<size_t>(d) * k * k;
          for (int i = 0; i < k; ++i) {
            const double g = n.grad[static_cast<size_t>(i) * d_out + d];
            if (g == 0.0) continue;
            if (pt.requires_grad) {
              for (int j = 0; j < k; ++j) {
                pt.grad[static_cast<size_t>(j) * d_out + d] += s[mbase + i * k + j] * g;
              }
            }
            if (pm.requires_grad) {
              double dot = 0.0;
              for (int j = 0; j < k; ++j) {
                ds[j] = g * pt.data[static_cast<size_t>(j) * d_out + d];
                dot += ds[j] * s[mbase + i * k + j];
              }
              for (int j = 0; j < k; ++j) {
                if (!adj[static_cast<size_t>(i) * k + j]) continue;
                pm.grad[mbase + i * k + j] += s[mbase + i * k + j] * (ds[j] - dot);
              }
            }
          }
        }
      });
  return relu(aggregated);
}

}  // namespace

Tensor semgconv_forward(const Tensor& nodes, const SkeletonGraph& graph, const Tensor& weight,
                        const Tensor& masks) {
  const int k = graph.num_joints;
  if (masks.rank() != 3 || masks.dims()[1] != k || masks.dims()[2] != k) {
    throw std::invalid_argument("semgconv: masks must be D_out x K x K");
  }
  return semgconv_apply(nodes, graph, weight, masks, masked_mask_softmax(masks, graph));
}

Tensor nonlocal_forward(const Tensor& nodes, const Tensor& theta_w, const Tensor& phi_w,
                        const Tensor& g_w, const Tensor& out_w) {
  const int k = nodes.dims()[0];
  auto q = matmul(nodes, theta_w);
  auto key = matmul(nodes, phi_w);
  auto affinity = softmax(matmul(q, transpose2d(key)), 1);
  auto gathered = matmul(affinity, matmul(nodes, g_w));
  return add(nodes, mul_c(matmul(gathered, out_w), 1.0 / static_cast<double>(k)));
}

void add_gcn_params(ParamSet& params, const GcnConfig& cfg, const SkeletonGraph& graph,
                    Rng& rng) {
  if (cfg.hidden < 2) throw std::invalid_argument("gcn: hidden must be >= 2");
  const int k = graph.num_joints;
  const int embed = cfg.hidden / 2;
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string p = "gcn.b" + std::to_string(b) + ".";
    const int in1 = b == 0 ? cfg.in_channels : cfg.hidden;
    params.add(p + "sg1.w", init_uniform({in1, cfg.hidden}, in1, rng));
    params.add(p + "sg1.mask", Tensor::zeros({cfg.hidden, k, k}, true));
    params.add(p + "sg2.w", init_uniform({cfg.hidden, cfg.hidden}, cfg.hidden, rng));
    params.add(p + "sg2.mask", Tensor::zeros({cfg.hidden, k, k}, true));
    params.add(p + "nl.theta.w", init_uniform({cfg.hidden, embed}, cfg.hidden, rng));
    params.add(p + "nl.phi.w", init_uniform({cfg.hidden, embed}, cfg.hidden, rng));
    params.add(p + "nl.g.w", init_uniform({cfg.hidden, embed}, cfg.hidden, rng));
    params.add(p + "nl.out.w", Tensor::zeros({embed, cfg.hidden}, true));
  }
  params.add("gcn.proj.w", init_uniform({cfg.hidden, cfg.out_channels}, cfg.hidden, rng));
  params.add("gcn.proj.b", init_uniform({cfg.out_channels}, cfg.hidden, rng));
}

Tensor gcn_forward(const ParamSet& params, const GcnConfig& cfg, const SkeletonGraph& graph,
                   const Tensor& keypoint_features) {
  return GcnBatchContext(params, cfg, graph).forward(keypoint_features);
}

GcnBatchContext::GcnBatchContext(const ParamSet& params, const GcnConfig& cfg,
                                 const SkeletonGraph& graph)
    : params_(params), cfg_(cfg), graph_(graph) {
  for (int b = 0; b < cfg.blocks; ++b) {
    const std::string p = "gcn.b" + std::to_string(b) + ".";
    layer_softmax_.push_back(masked_mask_softmax(params.at(p + "sg1.mask"), graph));
    layer_softmax_.push_back(masked_mask_softmax(params.at(p + "sg2.mask"), graph));
  }
}

Tensor GcnBatchContext::forward(const Tensor& keypoint_features) const {
  Tensor x = keypoint_features;
  for (int b = 0; b < cfg_.blocks; ++b) {
    const std::string p = "gcn.b" + std::to_string(b) + ".";
    x = semgconv_apply(x, graph_, params_.at(p + "sg1.w"), params_.at(p + "sg1.mask"),
                       layer_softmax_[static_cast<size_t>(b) * 2]);
    x = semgconv_apply(x, graph_, params_.at(p + "sg2.w"), params_.at(p + "sg2.mask"),
                       layer_softmax_[static_cast<size_t>(b) * 2 + 1]);
    x = nonlocal_forward(x, params_.at(p + "nl.theta.w"), params_.at(p + "nl.phi.w"),
                         params_.at(p + "nl.g.w"), params_.at(p + "nl.out.w"));
  }
  return add_rowwise(matmul(x, params_.at("gcn.proj.w")), params_.at("gcn.proj.b"));
}

double pair_similarity(const KeypointFeatures& a, const KeypointFeatures& b) {
  if (a.features.dims() != b.features.dims() || a.confidences.size() != b.confidences.size()) {
    throw std::invalid_argument("pair_similarity: dimension mismatch");
  }
  const int k = a.features.dims()[0];
  const int c = a.features.dims()[1];
  auto fa = a.features.data(), fb = b.features.data();

  auto normalized = [c](std::span<const double> v, int i, std::vector<double>& out) {
    double n2 = 0.0;
    for (int j = 0; j < c; ++j) n2 += v[static_cast<size_t>(i) * c + j] * v[static_cast<size_t>(i) * c + j];
    const double inv = n2 > 0.0 ? 1.0 / std::sqrt(n2) : 0.0;
    out.resize(c);
    for (int j = 0; j < c; ++j) out[j] = v[static_cast<size_t>(i) * c + j] * inv;
  };

  std::vector<double> va, vb;
  double raw = 0.0;
  for (int i = 0; i < k; ++i) {
    const double w = std::sqrt(a.confidences[i] * b.confidences[i]);
    if (w == 0.0) continue;
    normalized(fa, i, va);
    normalized(fb, i, vb);
    double mad = 0.0;
    for (int j = 0; j < c; ++j) mad += std::abs(va[j] - vb[j]);
    raw += w * mad / c;
  }
  raw /= k;
  return std::exp(-raw);
}

std::vector<std::pair<int, int>> select_pairs(const std::vector<KeypointFeatures>& batch_s,
                                              const std::vector<KeypointFeatures>& batch_t,
                                              double tau) {
  if (tau <= 0.0 || tau > 1.0) throw std::invalid_argument("select_pairs: tau must be in (0, 1]");
  std::vector<std::pair<int, int>> pairs;
  for (size_t m = 0; m < batch_s.size(); ++m) {
    for (size_t n = 0; n < batch_t.size(); ++n) {
      if (pair_similarity(batch_s[m], batch_t[n]) >= tau) {
        pairs.emplace_back(static_cast<int>(m), static_cast<int>(n));
      }
    }
  }
  return pairs;
}

Tensor topology_alignment_loss(const std::vector<Tensor>& reps_s,
                               const std::vector<Tensor>& reps_t,
                               const std::vector<std::pair<int, int>>& pairs) {
  if (pairs.empty()) return Tensor::scalar(0.0);
  const int k = reps_s.empty() ? 0 : reps_s[0].dims()[0];
  Tensor total = Tensor::scalar(0.0);
  for (auto [m, n] : pairs) {
    if (m < 0 || m >= static_cast<int>(reps_s.size()) || n < 0 ||
        n >= static_cast<int>(reps_t.size())) {
      throw std::out_of_range("topology_alignment_loss: pair index out of range");
    }
    for (int i = 0; i < k; ++i) {
      total = add(total, cosine_similarity(row(reps_s[m], i), row(reps_t[n], i)));
    }
  }
  const double count = static_cast<double>(pairs.size()) * k;
  return add_c(mul_c(total, -1.0 / count), 1.0);
}

}  // namespace poseadapt
