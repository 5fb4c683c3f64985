#include <cmath>

#include "doctest.h"
#include "poseadapt/heatmap.hpp"
#include "poseadapt/rng.hpp"

using namespace poseadapt;

TEST_CASE("rendered peak is exactly 1 at the keypoint cell") {
  // grid 16x16, stride 4: keypoint at image (32, 32) -> cell (8, 8)
  auto hm = render_heatmaps({{32.0, 32.0}}, {1}, 16, 16, 4, 2.0);
  CHECK(hm.maps.at({8 * 16 + 8, 0}) == 1.0);

  // value at distance 2 cells with sigma=2 is exp(-0.5)
  CHECK(hm.maps.at({8 * 16 + 10, 0}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(hm.maps.at({6 * 16 + 8, 0}) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("invisible keypoints render to zero maps") {
  auto hm = render_heatmaps({{32.0, 32.0}, {12.0, 40.0}}, {0, 1}, 16, 16, 4, 2.0);
  for (int p = 0; p < 256; ++p) CHECK(hm.maps.at({p, 0}) == 0.0);
  double peak = 0.0;
  for (int p = 0; p < 256; ++p) peak = std::max(peak, hm.maps.at({p, 1}));
  CHECK(peak == 1.0);
}

TEST_CASE("render errors") {
  CHECK_THROWS(render_heatmaps({{1.0, 1.0}}, {1}, 8, 8, 2, 0.0));
  CHECK_THROWS(render_heatmaps({{1.0, 1.0}}, {1, 1}, 8, 8, 2, 1.0));
}

TEST_CASE("decode recovers the rendered keypoint") {
  auto hm = render_heatmaps({{40.0, 24.0}}, {1}, 16, 16, 4, 2.0);
  auto dec = decode_keypoints(hm);
  CHECK(dec[0].x == 40.0);
  CHECK(dec[0].y == 24.0);
  CHECK(dec[0].confidence == 1.0);
}

TEST_CASE("decode on zero maps and ties") {
  HeatmapSet hm;
  hm.maps = Tensor::zeros({16, 1});
  hm.height = 4;
  hm.width = 4;
  hm.stride = 2;
  auto dec = decode_keypoints(hm);
  CHECK(dec[0].confidence == 0.0);
  CHECK(dec[0].x == 0.0);
  CHECK(dec[0].y == 0.0);

  // two equal peaks: lowest linear index wins, stable across calls
  hm.maps.mutable_data()[5 * 1] = 3.0;
  hm.maps.mutable_data()[9 * 1] = 3.0;
  auto d1 = decode_keypoints(hm);
  auto d2 = decode_keypoints(hm);
  CHECK(d1[0].x == 1 * 2.0);
  CHECK(d1[0].y == 1 * 2.0);
  CHECK(d1[0].x == d2[0].x);
  CHECK(d1[0].y == d2[0].y);
  CHECK(d1[0].confidence == 1.0);  // clamped into [0, 1]
}

TEST_CASE("render/decode round trip lands within one stride cell") {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const double x = rng.uniform(0.0, 63.999);
    const double y = rng.uniform(0.0, 63.999);
    auto hm = render_heatmaps({{x, y}}, {1}, 32, 32, 2, 1.5);
    auto dec = decode_keypoints(hm);
    CHECK(std::abs(dec[0].x - x) <= 2.0 + 1e-9);
    CHECK(std::abs(dec[0].y - y) <= 2.0 + 1e-9);
  }
}

TEST_CASE("mse pose loss on stated cases") {
  auto target = render_heatmaps({{8.0, 8.0}}, {1}, 8, 8, 2, 1.5);

  SUBCASE("identical maps give zero") {
    auto loss = mse_pose_loss({target}, {target}, {{1}});
    CHECK(loss.value() == 0.0);
  }
  SUBCASE("uniform offset of 1 gives H*W for one visible keypoint") {
    HeatmapSet pred = target;
    pred.maps = add_c(target.maps, 1.0);
    auto loss = mse_pose_loss({pred}, {target}, {{1}});
    CHECK(loss.value() == doctest::Approx(64.0).epsilon(1e-12));
  }
  SUBCASE("all keypoints invisible give zero") {
    HeatmapSet pred = target;
    pred.maps = add_c(target.maps, 5.0);
    auto loss = mse_pose_loss({pred}, {target}, {{0}});
    CHECK(loss.value() == 0.0);
  }
  SUBCASE("shape mismatch is an error") {
    auto other = render_heatmaps({{8.0, 8.0}}, {1}, 4, 4, 2, 1.5);
    CHECK_THROWS(mse_pose_loss({other}, {target}, {{1}}));
  }
}

TEST_CASE("mse pose loss is nonnegative and zero only on equal visible maps") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(32), b(32);
    for (auto& v : a) v = rng.uniform(-1.0, 1.0);
    for (auto& v : b) v = rng.uniform(-1.0, 1.0);
    HeatmapSet pa{Tensor::from_data({16, 2}, a), 4, 4, 2};
    HeatmapSet pb{Tensor::from_data({16, 2}, b), 4, 4, 2};
    auto loss = mse_pose_loss({pa}, {pb}, {{1, 1}}).value();
    CHECK(loss >= 0.0);
    if (a != b) CHECK(loss > 0.0);
    CHECK(mse_pose_loss({pa}, {pa}, {{1, 1}}).value() == 0.0);
  }
}
