#include <vector>

#include "doctest.h"
#include "poseadapt/gradcheck.hpp"
#include "poseadapt/posenet.hpp"

using namespace poseadapt;

namespace {

PoseNetConfig micro_config() {
  PoseNetConfig cfg;
  cfg.in_channels = 2;
  cfg.image_size = 8;
  cfg.enc_hidden = 3;
  cfg.channels = 4;
  cfg.dec_hidden = 4;
  cfg.num_keypoints = 2;
  return cfg;
}

Tensor random_image(const PoseNetConfig& cfg, Rng& rng) {
  std::vector<double> data(static_cast<size_t>(cfg.in_channels) * cfg.image_size * cfg.image_size);
  for (auto& v : data) v = rng.uniform(0.0, 1.0);
  return Tensor::from_data({cfg.in_channels, cfg.image_size, cfg.image_size}, std::move(data));
}

}  // namespace

TEST_CASE("forward emits configured shapes") {
  auto cfg = micro_config();
  Rng rng(404);
  ParamSet params;
  add_posenet_params(params, cfg, rng);
  auto img = random_image(cfg, rng);
  auto [features, maps] = posenet_forward(params, cfg, img);
  CHECK(features.dims() == std::vector<int>{cfg.feature_positions(), cfg.channels});
  CHECK(maps.maps.dims() ==
        std::vector<int>{cfg.heatmap_size() * cfg.heatmap_size(), cfg.num_keypoints});
  CHECK(maps.stride == cfg.heatmap_stride());

  // heatmaps come out of a softplus head, so they are nonnegative
  for (double v : maps.maps.data()) CHECK(v >= 0.0);
}

TEST_CASE("forward is deterministic given seed and input") {
  auto cfg = micro_config();
  auto run = [&] {
    Rng rng(77);
    ParamSet params;
    add_posenet_params(params, cfg, rng);
    auto img = random_image(cfg, rng);
    auto [features, maps] = posenet_forward(params, cfg, img);
    return std::vector<double>(maps.maps.data().begin(), maps.maps.data().end());
  };
  CHECK(run() == run());  // bitwise
}

TEST_CASE("dimension mismatch is an error") {
  auto cfg = micro_config();
  Rng rng(5);
  ParamSet params;
  add_posenet_params(params, cfg, rng);
  CHECK_THROWS(posenet_encode(params, cfg, Tensor::zeros({1, 8, 8})));
  CHECK_THROWS(posenet_decode(params, cfg, Tensor::zeros({3, cfg.channels})));
}

TEST_CASE("sum of heatmaps passes grad check over all parameters") {
  auto cfg = micro_config();
  Rng rng(99);
  ParamSet params;
  add_posenet_params(params, cfg, rng);
  auto img = random_image(cfg, rng);
  auto fn = [&] { return sum(posenet_forward(params, cfg, img).second.maps); };
  CHECK(grad_check(fn, params) <= 1e-4);
}
