#include "poseadapt/posenet.hpp"

#include <stdexcept>

namespace poseadapt {

namespace {

constexpr int kPatch = 2;

Tensor linear(const ParamSet& params, const std::string& prefix, const Tensor& x) {
  return add_rowwise(matmul(x, params.at(prefix + ".w")), params.at(prefix + ".b"));
}

}  // namespace

void add_posenet_params(ParamSet& params, const PoseNetConfig& cfg, Rng& rng) {
  if (cfg.image_size % 4 != 0) {
    throw std::invalid_argument("posenet: image_size must be divisible by 4");
  }
  const int in1 = cfg.in_channels * kPatch * kPatch;
  const int in2 = cfg.enc_hidden * kPatch * kPatch;
  const int mix = std::max(1, cfg.channels / 2);
  const int in_mix = mix * 9;
  params.add("posenet.enc1.w", init_uniform({in1, cfg.enc_hidden}, in1, rng));
  params.add("posenet.enc1.b", init_uniform({cfg.enc_hidden}, in1, rng));
  params.add("posenet.enc2.w", init_uniform({in2, cfg.channels}, in2, rng));
  params.add("posenet.enc2.b", init_uniform({cfg.channels}, in2, rng));
  for (const char* stage : {"enc3", "enc4"}) {
    const std::string p = std::string("posenet.") + stage;
    params.add(p + "a.w", init_uniform({cfg.channels, mix}, cfg.channels, rng));
    params.add(p + "a.b", init_uniform({mix}, cfg.channels, rng));
    params.add(p + "b.w", init_uniform({in_mix, cfg.channels}, in_mix, rng));
    params.add(p + "b.b", init_uniform({cfg.channels}, in_mix, rng));
  }
  params.add("posenet.dec1.w", init_uniform({cfg.channels, cfg.dec_hidden}, cfg.channels, rng));
  params.add("posenet.dec1.b", init_uniform({cfg.dec_hidden}, cfg.channels, rng));
  const int out2 = cfg.num_keypoints * kPatch * kPatch;
  params.add("posenet.dec2.w", init_uniform({cfg.dec_hidden, out2}, cfg.dec_hidden, rng));
  params.add("posenet.dec2.b", init_uniform({out2}, cfg.dec_hidden, rng));
}

Tensor posenet_encode(const ParamSet& params, const PoseNetConfig& cfg, const Tensor& image) {
  if (image.rank() != 3 || image.dims()[0] != cfg.in_channels ||
      image.dims()[1] != cfg.image_size || image.dims()[2] != cfg.image_size) {
    throw std::invalid_argument("posenet_encode: image dims do not match config");
  }
  const int half = cfg.image_size / 2;
  const int fs = cfg.feature_size();
  auto s1 = relu(linear(params, "posenet.enc1", patches(image, kPatch)));
  auto s2 = relu(linear(params, "posenet.enc2", regroup(s1, half, half, kPatch)));
  // two bottlenecked 3x3 mixing stages widen the receptive field past the
  // patch grid; the second is dilated to reach across the figure
  auto m3 = relu(linear(params, "posenet.enc3a", s2));
  auto s3 = relu(linear(params, "posenet.enc3b", neighborhood_concat(m3, fs, fs, 1, 1)));
  auto m4 = relu(linear(params, "posenet.enc4a", s3));
  auto s4 = relu(linear(params, "posenet.enc4b", neighborhood_concat(m4, fs, fs, 1, 2)));
  return s4;  // (feature_size^2) x channels
}

HeatmapSet posenet_decode(const ParamSet& params, const PoseNetConfig& cfg,
                          const Tensor& features) {
  if (features.rank() != 2 || features.dims()[0] != cfg.feature_positions() ||
      features.dims()[1] != cfg.channels) {
    throw std::invalid_argument("posenet_decode: feature dims do not match config");
  }
  const int fs = cfg.feature_size();
  auto d1 = relu(linear(params, "posenet.dec1", features));
  auto d2 = linear(params, "posenet.dec2", d1);
  HeatmapSet out;
  out.maps = softplus(expand_positions(d2, fs, fs, kPatch));
  out.height = cfg.heatmap_size();
  out.width = cfg.heatmap_size();
  out.stride = cfg.heatmap_stride();
  return out;
}

std::pair<Tensor, HeatmapSet> posenet_forward(const ParamSet& params, const PoseNetConfig& cfg,
                                              const Tensor& image) {
  auto features = posenet_encode(params, cfg, image);
  auto maps = posenet_decode(params, cfg, features);
  return {features, maps};
}

}  // namespace poseadapt
