#include <cmath>

#include "doctest.h"
#include "poseadapt/metrics.hpp"
#include "poseadapt/rng.hpp"

using namespace poseadapt;

namespace {

PoseSample sample_with(std::vector<Keypoint> kps, std::vector<uint8_t> vis) {
  PoseSample s;
  s.keypoints = std::move(kps);
  s.visibility = std::move(vis);
  return s;
}

std::vector<DecodedKeypoint> as_pred(const std::vector<Keypoint>& kps) {
  std::vector<DecodedKeypoint> out;
  for (const auto& k : kps) out.push_back({k.x, k.y, 1.0});
  return out;
}

}  // namespace

TEST_CASE("pck on exact and hopeless predictions") {
  auto skeleton = make_skeleton(3, {}, {{0, 1}, {1, 2}}, {}, {0, 1});
  auto gt = sample_with({{0, 0}, {10, 0}, {10, 10}}, {1, 1, 1});

  auto exact = pck({as_pred(gt.keypoints)}, {&gt}, 0.2, "bbox_diag", skeleton);
  CHECK(exact.total == 1.0);

  // displace everything by 10x the normalizer
  const double diag = std::hypot(10.0, 10.0);
  std::vector<Keypoint> far;
  for (const auto& k : gt.keypoints) far.push_back({k.x + 10 * diag, k.y});
  auto none = pck({as_pred(far)}, {&gt}, 0.2, "bbox_diag", skeleton);
  CHECK(none.total == 0.0);
}

TEST_CASE("threshold comparison is inclusive, against a distance oracle") {
  auto skeleton = make_skeleton(2, {}, {{0, 1}}, {}, {0, 1});
  auto gt = sample_with({{0, 0}, {0, 10}}, {1, 1});
  const double norm = 10.0;  // bbox diagonal of the two visible joints

  // joint 0 lands exactly at threshold * norm
  std::vector<Keypoint> preds = {{0.2 * norm, 0.0}, {0.0, 10.0}};
  auto report = pck({as_pred(preds)}, {&gt}, 0.2, "bbox_diag", skeleton);
  CHECK(report.per_joint[0] == 1.0);

  // brute-force oracle over random configurations
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Keypoint> p = {{rng.uniform(0, 10), rng.uniform(0, 10)},
                               {rng.uniform(0, 10), rng.uniform(0, 10)}};
    auto r = pck({as_pred(p)}, {&gt}, 0.2, "bbox_diag", skeleton);
    for (int j = 0; j < 2; ++j) {
      const double err = std::hypot(p[j].x - gt.keypoints[j].x, p[j].y - gt.keypoints[j].y);
      CHECK(r.per_joint[j] == (err <= 0.2 * norm ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("invisible joints are excluded and zero normalizers skip the sample") {
  auto skeleton = make_skeleton(3, {}, {{0, 1}, {1, 2}}, {}, {0, 1});
  auto gt = sample_with({{0, 0}, {0, 10}, {4, 4}}, {1, 1, 0});
  auto report = pck({as_pred({{0, 0}, {0, 10}, {500, 500}})}, {&gt}, 0.2, "bbox_diag",
                    skeleton);
  CHECK(report.evaluated[2] == 0);
  CHECK(report.total == 1.0);  // the wildly wrong invisible joint does not count

  // all joints at one point: zero bbox diagonal
  auto degenerate = sample_with({{5, 5}, {5, 5}, {5, 5}}, {1, 1, 1});
  auto skipped = pck({as_pred(degenerate.keypoints)}, {&degenerate}, 0.2, "bbox_diag",
                     skeleton);
  CHECK(skipped.skipped == 1);

  CHECK_THROWS(pck({}, {&gt}, 0.2, "bbox_diag", skeleton));
  CHECK_THROWS(pck({as_pred(gt.keypoints)}, {&gt}, 0.2, "nonsense", skeleton));
}

TEST_CASE("head normalizer uses the skeleton head segment") {
  auto skeleton = make_skeleton(3, {}, {{0, 1}, {1, 2}}, {}, {1, 2});
  auto gt = sample_with({{0, 0}, {0, 10}, {0, 14}}, {1, 1, 1});  // head length 4
  // error of 1.9 on joint 0: within 0.5 * 4 = 2
  auto report = pck({as_pred({{1.9, 0}, {0, 10}, {0, 14}})}, {&gt}, 0.5, "head", skeleton);
  CHECK(report.per_joint[0] == 1.0);
  auto miss = pck({as_pred({{2.1, 0}, {0, 10}, {0, 14}})}, {&gt}, 0.5, "head", skeleton);
  CHECK(miss.per_joint[0] == 0.0);

  // invisible head joint: sample skipped
  auto blind = sample_with({{0, 0}, {0, 10}, {0, 14}}, {1, 1, 0});
  auto r2 = pck({as_pred(blind.keypoints)}, {&blind}, 0.5, "head", skeleton);
  CHECK(r2.skipped == 1);
}
