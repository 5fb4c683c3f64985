#include <cmath>
#include <vector>

#include "doctest.h"
#include "poseadapt/gradcheck.hpp"
#include "poseadapt/ihta.hpp"

using namespace poseadapt;

namespace {

SkeletonGraph chain4() {
  return make_skeleton(4, {}, {{0, 1}, {1, 2}, {2, 3}});
}

Tensor random_mat(int r, int c, Rng& rng, bool grad = false) {
  std::vector<double> d(static_cast<size_t>(r) * c);
  for (auto& v : d) v = rng.uniform(-1.0, 1.0);
  return Tensor::from_data({r, c}, std::move(d), grad);
}

KeypointFeatures kf_from(std::vector<std::vector<double>> rows, std::vector<double> conf) {
  const int k = static_cast<int>(rows.size());
  const int c = static_cast<int>(rows[0].size());
  std::vector<double> flat;
  for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());
  KeypointFeatures kf;
  kf.features = Tensor::from_data({k, c}, std::move(flat));
  kf.confidences = std::move(conf);
  return kf;
}

}  // namespace

TEST_CASE("keypoint feature extraction matches masked averages") {
  Rng rng(1);
  auto features = random_mat(4, 3, rng);  // 2x2 grid, 3 channels
  HeatmapSet maps;
  maps.height = 2;
  maps.width = 2;
  maps.stride = 2;
  // keypoint 0: all zeros; keypoint 1: all ones; keypoint 2: one-hot at cell 3
  std::vector<double> m(4 * 3, 0.0);
  for (int p = 0; p < 4; ++p) m[p * 3 + 1] = 1.0;
  m[3 * 3 + 2] = 1.0;
  maps.maps = Tensor::from_data({4, 3}, std::move(m));

  auto kf = extract_keypoint_features(features, maps, 2, 2);
  REQUIRE(kf.features.dims() == std::vector<int>{3, 3});
  for (int c = 0; c < 3; ++c) {
    CHECK(kf.features.at({0, c}) == 0.0);
    double avg = 0.0;
    for (int p = 0; p < 4; ++p) avg += features.at({p, c}) / 4.0;
    CHECK(kf.features.at({1, c}) == doctest::Approx(avg).epsilon(1e-12));
    CHECK(kf.features.at({2, c}) == doctest::Approx(features.at({3, c}) / 4.0).epsilon(1e-12));
  }
  CHECK(kf.confidences[0] == 0.0);
  CHECK(kf.confidences[1] == 1.0);
}

TEST_CASE("skeleton adjacency basics") {
  auto two = make_skeleton(2, {}, {{0, 1}});
  CHECK(two.adjacency == std::vector<uint8_t>{1, 1, 1, 1});

  auto three = make_skeleton(3, {}, {});
  CHECK(three.adjacency == std::vector<uint8_t>{1, 0, 0, 0, 1, 0, 0, 0, 1});

  // duplicates collapse, out-of-range endpoints throw
  auto dup = make_skeleton(3, {}, {{0, 1}, {1, 0}, {0, 1}});
  CHECK(dup.limbs.size() == 1);
  CHECK_THROWS(make_skeleton(3, {}, {{0, 3}}));

  // MPII 16-joint table: row sums are degree + 1
  auto mpii = default_skeleton16();
  const std::vector<int> degree = {1, 2, 2, 2, 2, 1, 3, 4, 2, 1, 1, 2, 2, 2, 2, 1};
  for (int i = 0; i < 16; ++i) CHECK(mpii.degree_with_self(i) == degree[i] + 1);
}

TEST_CASE("semgconv on the two-node example") {
  auto graph = make_skeleton(2, {}, {{0, 1}});
  auto nodes = Tensor::from_data({2, 1}, {1.0, 3.0});
  auto weight = Tensor::from_data({1, 1}, {1.0});
  auto masks = Tensor::zeros({1, 2, 2});
  auto out = semgconv_forward(nodes, graph, weight, masks);
  CHECK(out.at({0, 0}) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out.at({1, 0}) == doctest::Approx(2.0).epsilon(1e-12));

  // all-negative pre-activation goes to zero
  auto neg = semgconv_forward(nodes, graph, Tensor::from_data({1, 1}, {-1.0}), masks);
  CHECK(neg.at({0, 0}) == 0.0);
  CHECK(neg.at({1, 0}) == 0.0);
}

TEST_CASE("semgconv output depends only on skeleton neighbors") {
  auto graph = chain4();
  Rng rng(2);
  auto weight = random_mat(3, 5, rng, true);
  std::vector<double> mask_data(5 * 4 * 4);
  for (auto& v : mask_data) v = rng.uniform(-1.0, 1.0);
  auto masks = Tensor::from_data({5, 4, 4}, mask_data);

  auto base = random_mat(4, 3, rng);
  auto out0 = semgconv_forward(base, graph, weight, masks);

  // node 3 is not a neighbor of node 0 (chain 0-1-2-3); perturb its features
  auto perturbed_data = std::vector<double>(base.data().begin(), base.data().end());
  for (int c = 0; c < 3; ++c) perturbed_data[3 * 3 + c] += rng.uniform(0.5, 2.0);
  auto out1 =
      semgconv_forward(Tensor::from_data({4, 3}, perturbed_data), graph, weight, masks);
  for (int d = 0; d < 5; ++d) {
    CHECK(out1.at({0, d}) == out0.at({0, d}));  // exact, node 3 is two hops away
    CHECK(out1.at({1, d}) == out0.at({1, d}));
  }
}

TEST_CASE("semgconv matches a dense double-loop evaluation") {
  auto graph = chain4();
  Rng rng(3);
  const int d_in = 3, d_out = 4, k = 4;
  auto nodes = random_mat(k, d_in, rng);
  auto weight = random_mat(d_in, d_out, rng);
  std::vector<double> mask_data(static_cast<size_t>(d_out) * k * k);
  for (auto& v : mask_data) v = rng.uniform(-2.0, 2.0);
  auto masks = Tensor::from_data({d_out, k, k}, mask_data);

  auto out = semgconv_forward(nodes, graph, weight, masks);

  for (int d = 0; d < d_out; ++d) {
    for (int i = 0; i < k; ++i) {
      // masked softmax over node i's neighbors
      double z = 0.0;
      for (int j = 0; j < k; ++j) {
        if (graph.adjacent(i, j)) z += std::exp(mask_data[(d * k + i) * k + j]);
      }
      double acc = 0.0;
      for (int j = 0; j < k; ++j) {
        if (!graph.adjacent(i, j)) continue;
        const double alpha = std::exp(mask_data[(d * k + i) * k + j]) / z;
        double t = 0.0;
        for (int c = 0; c < d_in; ++c) t += nodes.at({j, c}) * weight.at({c, d});
        acc += alpha * t;
      }
      acc = std::max(acc, 0.0);
      CHECK(out.at({i, d}) == doctest::Approx(acc).epsilon(1e-12));
    }
  }
}

TEST_CASE("semgconv gradients match finite differences") {
  auto graph = chain4();
  Rng rng(4);
  ParamSet params;
  params.add("v", random_mat(4, 3, rng, true));
  params.add("w", random_mat(3, 2, rng, true));
  std::vector<double> mask_data(2 * 4 * 4);
  for (auto& v : mask_data) v = rng.uniform(-1.0, 1.0);
  params.add("m", Tensor::from_data({2, 4, 4}, mask_data, true));

  auto fn = [&] {
    auto y = semgconv_forward(params.at("v"), graph, params.at("w"), params.at("m"));
    return sum(mul(y, y));
  };
  CHECK(grad_check(fn, params) <= 1e-4);
}

TEST_CASE("non-local layer is the identity at zero output weight") {
  Rng rng(5);
  auto nodes = random_mat(6, 4, rng);
  auto theta = random_mat(4, 2, rng);
  auto phi = random_mat(4, 2, rng);
  auto g = random_mat(4, 2, rng);
  auto out_w = Tensor::zeros({2, 4}, true);
  auto out = nonlocal_forward(nodes, theta, phi, g, out_w);
  for (int64_t i = 0; i < nodes.numel(); ++i) CHECK(out.data()[i] == nodes.data()[i]);  // bitwise
}

TEST_CASE("single-node non-local reduces to v + Wv g(v)") {
  Rng rng(6);
  auto v = random_mat(1, 3, rng);
  auto theta = random_mat(3, 2, rng);
  auto phi = random_mat(3, 2, rng);
  auto g = random_mat(3, 2, rng);
  auto out_w = random_mat(2, 3, rng);
  auto out = nonlocal_forward(v, theta, phi, g, out_w);
  auto want = add(v, matmul(matmul(v, g), out_w));
  for (int c = 0; c < 3; ++c) {
    CHECK(out.at({0, c}) == doctest::Approx(want.at({0, c})).epsilon(1e-12));
  }
}

TEST_CASE("non-local gradients match finite differences") {
  Rng rng(7);
  ParamSet params;
  params.add("v", random_mat(4, 3, rng, true));
  params.add("theta", random_mat(3, 2, rng, true));
  params.add("phi", random_mat(3, 2, rng, true));
  params.add("g", random_mat(3, 2, rng, true));
  params.add("out", random_mat(2, 3, rng, true));
  auto fn = [&] {
    auto y = nonlocal_forward(params.at("v"), params.at("theta"), params.at("phi"),
                              params.at("g"), params.at("out"));
    return sum(mul(y, y));
  };
  CHECK(grad_check(fn, params) <= 1e-4);
}

TEST_CASE("pair similarity on stated cases") {
  auto a = kf_from({{1.0, 0.0}}, {1.0});
  auto b = kf_from({{0.0, 1.0}}, {1.0});
  CHECK(pair_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(pair_similarity(a, b) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(pair_similarity(a, b) == doctest::Approx(pair_similarity(b, a)).epsilon(1e-12));

  // zero confidence removes the keypoint's contribution entirely
  auto c = kf_from({{1.0, 0.0}, {0.0, 1.0}}, {1.0, 0.0});
  auto d = kf_from({{1.0, 0.0}, {1.0, 0.0}}, {1.0, 1.0});
  CHECK(pair_similarity(c, d) == doctest::Approx(1.0).epsilon(1e-12));

  CHECK(pair_similarity(a, b) > 0.0);
  CHECK(pair_similarity(a, b) <= 1.0);
}

TEST_CASE("pair selection gates by threshold") {
  Rng rng(8);
  std::vector<KeypointFeatures> batch;
  for (int i = 0; i < 3; ++i) {
    KeypointFeatures kf;
    kf.features = random_mat(4, 3, rng);
    kf.confidences = {1.0, 1.0, 1.0, 1.0};
    batch.push_back(std::move(kf));
  }
  // identical batches: every diagonal pair is selected
  auto pairs = select_pairs(batch, batch, 0.7);
  for (int i = 0; i < 3; ++i) {
    bool found = false;
    for (auto [m, n] : pairs) found = found || (m == i && n == i);
    CHECK(found);
  }
  // source-major order
  for (size_t i = 1; i < pairs.size(); ++i) {
    CHECK(pairs[i - 1].first <= pairs[i].first);
  }

  // tau = 1 with non-identical poses selects nothing
  std::vector<KeypointFeatures> other;
  for (int i = 0; i < 3; ++i) {
    KeypointFeatures kf;
    kf.features = random_mat(4, 3, rng);
    kf.confidences = {1.0, 1.0, 1.0, 1.0};
    other.push_back(std::move(kf));
  }
  CHECK(select_pairs(batch, other, 1.0).empty());
  CHECK_THROWS(select_pairs(batch, other, 0.0));
  CHECK_THROWS(select_pairs(batch, other, 1.5));

  // a constructed near-duplicate is the only pair above 0.7
  auto base = kf_from({{1.0, 0.0}, {0.0, 1.0}}, {1.0, 1.0});
  auto near = kf_from({{0.995, 0.1}, {0.1, 0.995}}, {1.0, 1.0});
  auto far1 = kf_from({{-1.0, 0.0}, {0.0, -1.0}}, {1.0, 1.0});
  auto far2 = kf_from({{0.0, -1.0}, {-1.0, 0.0}}, {1.0, 1.0});
  auto sel = select_pairs({base}, {far1, near, far2}, 0.7);
  REQUIRE(sel.size() == 1);
  CHECK(sel[0] == std::pair<int, int>{0, 1});
}

TEST_CASE("topology alignment loss") {
  Rng rng(9);
  std::vector<Tensor> reps_s = {random_mat(3, 4, rng), random_mat(3, 4, rng)};
  std::vector<Tensor> reps_t = {reps_s[0], random_mat(3, 4, rng)};

  SUBCASE("identical representations give zero") {
    auto loss = topology_alignment_loss(reps_s, reps_t, {{0, 0}});
    CHECK(std::abs(loss.value()) <= 1e-12);
  }
  SUBCASE("empty pair list gives zero") {
    auto loss = topology_alignment_loss(reps_s, reps_t, {});
    CHECK(loss.value() == 0.0);
    CHECK_FALSE(loss.requires_grad());
  }
  SUBCASE("opposite vectors give two") {
    std::vector<Tensor> a = {Tensor::from_data({1, 2}, {1.0, 0.0})};
    std::vector<Tensor> b = {Tensor::from_data({1, 2}, {-1.0, 0.0})};
    CHECK(topology_alignment_loss(a, b, {{0, 0}}).value() ==
          doctest::Approx(2.0).epsilon(1e-12));
  }
  SUBCASE("bad index throws") {
    CHECK_THROWS(topology_alignment_loss(reps_s, reps_t, {{5, 0}}));
  }
}

TEST_CASE("full gcn stack passes grad check on a toy skeleton") {
  auto graph = chain4();
  GcnConfig cfg;
  cfg.in_channels = 3;
  cfg.hidden = 4;
  cfg.blocks = 1;
  cfg.out_channels = 2;
  Rng rng(10);
  ParamSet params;
  add_gcn_params(params, cfg, graph, rng);
  auto kf = random_mat(4, 3, rng, true);
  params.add("input", kf);

  auto fn = [&] {
    auto rep = gcn_forward(params, cfg, graph, params.at("input"));
    return sum(mul(rep, rep));
  };
  CHECK(grad_check(fn, params) <= 1e-4);
}
