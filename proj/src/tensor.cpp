#include "poseadapt/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace poseadapt {

namespace {

bool g_finite_checks = true;

using MapMat =
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MapConstMat =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

int64_t product(const std::vector<int>& dims) {
  int64_t n = 1;
  for (int d : dims) n *= d;
  return n;
}

[[noreturn]] void fail(const char* op, const std::string& msg) {
  throw std::invalid_argument(std::string(op) + ": " + msg);
}

void require(bool cond, const char* op, const std::string& msg) {
  if (!cond) fail(op, msg);
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) fail(op, "undefined tensor");
}

void check_finite(const char* op, std::span<const double> d) {
  if (!g_finite_checks || d.empty()) return;
  Eigen::Map<const Eigen::ArrayXd> a(d.data(), static_cast<Eigen::Index>(d.size()));
  if (!a.allFinite()) {
    throw std::runtime_error(std::string(op) + ": non-finite value in result");
  }
}

std::shared_ptr<detail::Node> new_leaf(std::vector<int> dims, std::vector<double> data,
                                       bool requires_grad) {
  if (product(dims) != static_cast<int64_t>(data.size())) {
    fail("tensor", "dims do not match data length");
  }
  auto n = std::make_shared<detail::Node>();
  n->dims = std::move(dims);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return n;
}

}  // namespace

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks_enabled() { return g_finite_checks; }

Tensor Tensor::zeros(std::vector<int> dims, bool requires_grad) {
  auto n = product(dims);
  return Tensor(new_leaf(std::move(dims), std::vector<double>(n, 0.0), requires_grad));
}

Tensor Tensor::full(std::vector<int> dims, double value, bool requires_grad) {
  auto n = product(dims);
  return Tensor(new_leaf(std::move(dims), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return Tensor(new_leaf({1}, {value}, requires_grad));
}

Tensor Tensor::from_data(std::vector<int> dims, std::vector<double> data, bool requires_grad) {
  return Tensor(new_leaf(std::move(dims), std::move(data), requires_grad));
}

double Tensor::value() const {
  require_defined(*this, "value");
  require(numel() == 1, "value", "tensor is not a scalar");
  return node_->data[0];
}

double Tensor::at(std::initializer_list<int> idx) const {
  require_defined(*this, "at");
  require(static_cast<int>(idx.size()) == rank(), "at", "index rank mismatch");
  int64_t flat = 0;
  int i = 0;
  for (int v : idx) {
    require(v >= 0 && v < node_->dims[i], "at", "index out of range");
    flat = flat * node_->dims[i] + v;
    ++i;
  }
  return node_->data[flat];
}

void Tensor::backward() {
  require_defined(*this, "backward");
  require(numel() == 1, "backward", "backward requires a scalar");
  if (!node_->requires_grad) return;

  // post-order DFS over requires_grad subgraph
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen;
  std::vector<std::pair<detail::Node*, size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  seen.insert(node_.get());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      detail::Node* p = n->parents[next].get();
      ++next;
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  node_->ensure_grad();
  node_->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

void Tensor::zero_grad() {
  require_defined(*this, "zero_grad");
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const {
  require_defined(*this, "detach");
  return Tensor(new_leaf(node_->dims, node_->data, false));
}

Tensor make_op(const char* name, std::vector<int> dims, std::vector<double> data,
               std::vector<Tensor> parents, std::function<void(detail::Node&)> backward) {
  check_finite(name, data);
  bool rg = false;
  for (const auto& p : parents) rg = rg || p.requires_grad();
  auto n = new_leaf(std::move(dims), std::move(data), rg);
  if (rg) {
    n->parents.reserve(parents.size());
    for (auto& p : parents) n->parents.push_back(p.node());
    n->backward = std::move(backward);
  }
  return Tensor(n);
}

// ---------------------------------------------------------------------------
// elementwise

namespace {

void require_same_dims(const Tensor& a, const Tensor& b, const char* op) {
  require_defined(a, op);
  require_defined(b, op);
  require(a.dims() == b.dims(), op, "shape mismatch");
}

void acc(detail::Node& dst, std::span<const double> g) {
  dst.ensure_grad();
  for (size_t i = 0; i < g.size(); ++i) dst.grad[i] += g[i];
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_dims(a, b, "add");
  std::vector<double> out(a.numel());
  auto da = a.data(), db = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = da[i] + db[i];
  return make_op("add", a.dims(), std::move(out), {a, b}, [](detail::Node& n) {
    for (auto& p : n.parents) {
      if (p->requires_grad) acc(*p, n.grad);
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_dims(a, b, "sub");
  std::vector<double> out(a.numel());
  auto da = a.data(), db = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = da[i] - db[i];
  return make_op("sub", a.dims(), std::move(out), {a, b}, [](detail::Node& n) {
    if (n.parents[0]->requires_grad) acc(*n.parents[0], n.grad);
    if (n.parents[1]->requires_grad) {
      auto& p = *n.parents[1];
      p.ensure_grad();
      for (size_t i = 0; i < n.grad.size(); ++i) p.grad[i] -= n.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_dims(a, b, "mul");
  std::vector<double> out(a.numel());
  auto da = a.data(), db = b.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = da[i] * db[i];
  return make_op("mul", a.dims(), std::move(out), {a, b}, [](detail::Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += n.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (size_t i = 0; i < n.grad.size(); ++i) pb.grad[i] += n.grad[i] * pa.data[i];
    }
  });
}

Tensor add_c(const Tensor& a, double c) {
  require_defined(a, "add_c");
  std::vector<double> out(a.numel());
  auto da = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = da[i] + c;
  return make_op("add_c", a.dims(), std::move(out), {a}, [](detail::Node& n) {
    if (n.parents[0]->requires_grad) acc(*n.parents[0], n.grad);
  });
}

Tensor mul_c(const Tensor& a, double c) {
  require_defined(a, "mul_c");
  std::vector<double> out(a.numel());
  auto da = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = da[i] * c;
  return make_op("mul_c", a.dims(), std::move(out), {a}, [c](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) p.grad[i] += c * n.grad[i];
  });
}

Tensor scale(const Tensor& a, const Tensor& s) {
  require_defined(a, "scale");
  require_defined(s, "scale");
  require(s.numel() == 1, "scale", "scale factor must have one element");
  const double sv = s.data()[0];
  std::vector<double> out(a.numel());
  auto da = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = da[i] * sv;
  return make_op("scale", a.dims(), std::move(out), {a, s}, [sv](detail::Node& n) {
    auto& pa = *n.parents[0];
    auto& ps = *n.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (size_t i = 0; i < n.grad.size(); ++i) pa.grad[i] += sv * n.grad[i];
    }
    if (ps.requires_grad) {
      ps.ensure_grad();
      double g = 0.0;
      for (size_t i = 0; i < n.grad.size(); ++i) g += n.grad[i] * pa.data[i];
      ps.grad[0] += g;
    }
  });
}

Tensor add_rowwise(const Tensor& a, const Tensor& b) {
  require_defined(a, "add_rowwise");
  require_defined(b, "add_rowwise");
  require(a.rank() == 2 && b.rank() == 1, "add_rowwise", "matrix and vector required");
  const int m = a.dims()[0], n = a.dims()[1];
  require(b.dims()[0] == n, "add_rowwise", "vector length mismatch");
  std::vector<double> out(a.numel());
  auto da = a.data(), db = b.data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      out[static_cast<size_t>(i) * n + j] = da[static_cast<size_t>(i) * n + j] + db[j];
    }
  }
  return make_op("add_rowwise", a.dims(), std::move(out), {a, b}, [m, n](detail::Node& nd) {
    auto& pa = *nd.parents[0];
    auto& pb = *nd.parents[1];
    if (pa.requires_grad) acc(pa, nd.grad);
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (int i = 0; i < m; ++i) {
        for (int j = 0; j < n; ++j) pb.grad[j] += nd.grad[static_cast<size_t>(i) * n + j];
      }
    }
  });
}

namespace {

template <typename F, typename DF>
Tensor unary_op(const char* name, const Tensor& a, F f, DF df) {
  require_defined(a, name);
  std::vector<double> out(a.numel());
  auto da = a.data();
  for (size_t i = 0; i < out.size(); ++i) out[i] = f(da[i]);
  return make_op(name, a.dims(), std::move(out), {a}, [df](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (size_t i = 0; i < n.grad.size(); ++i) {
      p.grad[i] += n.grad[i] * df(p.data[i], n.data[i]);
    }
  });
}

}  // namespace

Tensor relu(const Tensor& a) {
  return unary_op(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor softplus(const Tensor& a) {
  return unary_op(
      "softplus", a,
      [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
      [](double x, double) { return 1.0 / (1.0 + std::exp(-x)); });
}

Tensor vexp(const Tensor& a) {
  return unary_op(
      "vexp", a, [](double x) { return std::exp(x); },
      [](double, double y) { return y; });
}

Tensor vlog(const Tensor& a) {
  return unary_op(
      "vlog", a, [](double x) { return std::log(x); },
      [](double x, double) { return 1.0 / x; });
}

Tensor vsqrt(const Tensor& a) {
  return unary_op(
      "vsqrt", a, [](double x) { return std::sqrt(x); },
      [](double, double y) { return 0.5 / y; });
}

Tensor vabs(const Tensor& a) {
  return unary_op(
      "vabs", a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor plogp(const Tensor& a) {
  return unary_op(
      "plogp", a, [](double x) { return x > 0.0 ? x * std::log(x) : 0.0; },
      [](double x, double) { return x > 0.0 ? std::log(x) + 1.0 : 0.0; });
}

// ---------------------------------------------------------------------------
// shape

Tensor reshape(const Tensor& a, std::vector<int> dims) {
  require_defined(a, "reshape");
  require(product(dims) == a.numel(), "reshape", "element count mismatch");
  std::vector<double> out(a.data().begin(), a.data().end());
  return make_op("reshape", std::move(dims), std::move(out), {a}, [](detail::Node& n) {
    if (n.parents[0]->requires_grad) acc(*n.parents[0], n.grad);
  });
}

Tensor transpose2d(const Tensor& a) {
  require_defined(a, "transpose2d");
  require(a.rank() == 2, "transpose2d", "rank-2 tensor required");
  const int m = a.dims()[0], k = a.dims()[1];
  std::vector<double> out(a.numel());
  auto da = a.data();
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < k; ++j) out[static_cast<size_t>(j) * m + i] = da[static_cast<size_t>(i) * k + j];
  }
  return make_op("transpose2d", {k, m}, std::move(out), {a}, [m, k](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < k; ++j) {
        p.grad[static_cast<size_t>(i) * k + j] += n.grad[static_cast<size_t>(j) * m + i];
      }
    }
  });
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  require(!parts.empty(), "concat", "empty part list");
  for (const auto& p : parts) require_defined(p, "concat");
  const int rank = parts[0].rank();
  require(axis >= 0 && axis < rank, "concat", "axis out of range");
  std::vector<int> dims = parts[0].dims();
  int total_axis = 0;
  for (const auto& p : parts) {
    require(p.rank() == rank, "concat", "rank mismatch");
    for (int d = 0; d < rank; ++d) {
      if (d != axis) require(p.dims()[d] == dims[d], "concat", "shape mismatch off-axis");
    }
    total_axis += p.dims()[axis];
  }
  dims[axis] = total_axis;

  int64_t inner = 1;
  for (int d = axis + 1; d < rank; ++d) inner *= dims[d];
  int64_t outer = 1;
  for (int d = 0; d < axis; ++d) outer *= dims[d];

  std::vector<double> out(product(dims));
  std::vector<int64_t> spans;  // per-part axis extent * inner
  spans.reserve(parts.size());
  for (const auto& p : parts) spans.push_back(static_cast<int64_t>(p.dims()[axis]) * inner);
  const int64_t out_stride = static_cast<int64_t>(total_axis) * inner;
  for (int64_t o = 0; o < outer; ++o) {
    int64_t off = 0;
    for (size_t pi = 0; pi < parts.size(); ++pi) {
      auto src = parts[pi].data();
      std::copy_n(src.begin() + o * spans[pi], spans[pi], out.begin() + o * out_stride + off);
      off += spans[pi];
    }
  }
  return make_op("concat", std::move(dims), std::move(out), parts,
                 [outer, out_stride, spans](detail::Node& n) {
                   for (int64_t o = 0; o < outer; ++o) {
                     int64_t off = 0;
                     for (size_t pi = 0; pi < n.parents.size(); ++pi) {
                       auto& p = *n.parents[pi];
                       if (p.requires_grad) {
                         p.ensure_grad();
                         for (int64_t i = 0; i < spans[pi]; ++i) {
                           p.grad[o * spans[pi] + i] += n.grad[o * out_stride + off + i];
                         }
                       }
                       off += spans[pi];
                     }
                   }
                 });
}

Tensor row(const Tensor& a, int i) {
  require_defined(a, "row");
  require(a.rank() == 2, "row", "rank-2 tensor required");
  require(i >= 0 && i < a.dims()[0], "row", "row index out of range");
  const int ncol = a.dims()[1];
  std::vector<double> out(a.data().begin() + static_cast<int64_t>(i) * ncol,
                          a.data().begin() + static_cast<int64_t>(i + 1) * ncol);
  return make_op("row", {ncol}, std::move(out), {a}, [i, ncol](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int j = 0; j < ncol; ++j) p.grad[static_cast<size_t>(i) * ncol + j] += n.grad[j];
  });
}

// ---------------------------------------------------------------------------
// linear algebra / reductions

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_defined(a, "matmul");
  require_defined(b, "matmul");
  require(a.rank() == 2 && b.rank() == 2, "matmul", "rank-2 tensors required");
  const int m = a.dims()[0], k = a.dims()[1], n = b.dims()[1];
  require(b.dims()[0] == k, "matmul", "inner dimension mismatch");
  std::vector<double> out(static_cast<size_t>(m) * n);
  {
    MapConstMat A(a.data().data(), m, k), B(b.data().data(), k, n);
    MapMat C(out.data(), m, n);
    C.noalias() = A * B;
  }
  return make_op("matmul", {m, n}, std::move(out), {a, b}, [m, k, n](detail::Node& nd) {
    auto& pa = *nd.parents[0];
    auto& pb = *nd.parents[1];
    MapConstMat G(nd.grad.data(), m, n);
    if (pa.requires_grad) {
      pa.ensure_grad();
      MapConstMat B(pb.data.data(), k, n);
      MapMat dA(pa.grad.data(), m, k);
      dA.noalias() += G * B.transpose();
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      MapConstMat A(pa.data.data(), m, k);
      MapMat dB(pb.grad.data(), k, n);
      dB.noalias() += A.transpose() * G;
    }
  });
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_op("sum", {1}, {s}, {a}, [](detail::Node& n) {
    auto& p = *n.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    const double g = n.grad[0];
    for (auto& v : p.grad) v += g;
  });
}

Tensor mean(const Tensor& a) {
  require_defined(a, "mean");
  require(a.numel() > 0, "mean", "empty tensor");
  return mul_c(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor softmax(const Tensor& a, int axis) {
  require_defined(a, "softmax");
  require(axis >= 0 && axis < a.rank(), "softmax", "axis out of range");
  check_finite("softmax(input)", a.data());
  const auto& dims = a.dims();
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= dims[d];
  for (int d = axis + 1; d < a.rank(); ++d) inner *= dims[d];
  const int64_t n = dims[axis];

  std::vector<double> out(a.numel());
  auto src = a.data();
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t in = 0; in < inner; ++in) {
      const int64_t base = o * n * inner + in;
      double mx = src[base];
      for (int64_t j = 1; j < n; ++j) mx = std::max(mx, src[base + j * inner]);
      double z = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        const double e = std::exp(src[base + j * inner] - mx);
        out[base + j * inner] = e;
        z += e;
      }
      const double iz = 1.0 / z;
      for (int64_t j = 0; j < n; ++j) out[base + j * inner] *= iz;
    }
  }
  return make_op("softmax", dims, std::move(out), {a}, [outer, inner, n](detail::Node& nd) {
    auto& p = *nd.parents[0];
    if (!p.requires_grad) return;
    p.ensure_grad();
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t in = 0; in < inner; ++in) {
        const int64_t base = o * n * inner + in;
        double dot = 0.0;
        for (int64_t j = 0; j < n; ++j) dot += nd.grad[base + j * inner] * nd.data[base + j * inner];
        for (int64_t j = 0; j < n; ++j) {
          const int64_t idx = base + j * inner;
          p.grad[idx] += nd.data[idx] * (nd.grad[idx] - dot);
        }
      }
    }
  });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  require_defined(a, "cosine_similarity");
  require_defined(b, "cosine_similarity");
  require(a.numel() == b.numel(), "cosine_similarity", "length mismatch");
  auto da = a.data(), db = b.data();
  double dot = 0.0, na2 = 0.0, nb2 = 0.0;
  for (size_t i = 0; i < da.size(); ++i) {
    dot += da[i] * db[i];
    na2 += da[i] * da[i];
    nb2 += db[i] * db[i];
  }
  // zero vectors have no direction: similarity defined as 0, gradient 0
  if (na2 == 0.0 || nb2 == 0.0) {
    return make_op("cosine_similarity", {1}, {0.0}, {a, b}, [](detail::Node&) {});
  }
  const double na = std::sqrt(na2), nb = std::sqrt(nb2);
  const double c = dot / (na * nb);
  return make_op("cosine_similarity", {1}, {c}, {a, b}, [na, nb, c](detail::Node& n) {
    auto& pa = *n.parents[0];
    auto& pb = *n.parents[1];
    const double g = n.grad[0];
    const double inab = 1.0 / (na * nb);
    if (pa.requires_grad) {
      pa.ensure_grad();
      const double ina2 = 1.0 / (na * na);
      for (size_t i = 0; i < pa.data.size(); ++i) {
        pa.grad[i] += g * (pb.data[i] * inab - c * pa.data[i] * ina2);
      }
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      const double inb2 = 1.0 / (nb * nb);
      for (size_t i = 0; i < pb.data.size(); ++i) {
        pb.grad[i] += g * (pa.data[i] * inab - c * pb.data[i] * inb2);
      }
    }
  });
}

// ---------------------------------------------------------------------------
// position-major movement ops (pure gathers; backward scatters the gradient)

namespace {

Tensor gather_op(const char* name, const Tensor& src, std::vector<int> out_dims,
                 std::vector<int64_t> index) {
  std::vector<double> out(index.size());
  auto d = src.data();
  for (size_t i = 0; i < index.size(); ++i) out[i] = d[index[i]];
  return make_op(name, std::move(out_dims), std::move(out), {src},
                 [index = std::move(index)](detail::Node& n) {
                   auto& p = *n.parents[0];
                   if (!p.requires_grad) return;
                   p.ensure_grad();
                   for (size_t i = 0; i < index.size(); ++i) p.grad[index[i]] += n.grad[i];
                 });
}

}  // namespace

Tensor patches(const Tensor& chw, int p) {
  require_defined(chw, "patches");
  require(chw.rank() == 3, "patches", "C x H x W tensor required");
  const int C = chw.dims()[0], H = chw.dims()[1], W = chw.dims()[2];
  require(p > 0 && H % p == 0 && W % p == 0, "patches", "patch must divide H and W");
  const int h = H / p, w = W / p;
  std::vector<int64_t> index(static_cast<size_t>(h) * w * C * p * p);
  size_t k = 0;
  for (int by = 0; by < h; ++by) {
    for (int bx = 0; bx < w; ++bx) {
      for (int c = 0; c < C; ++c) {
        for (int dy = 0; dy < p; ++dy) {
          for (int dx = 0; dx < p; ++dx) {
            index[k++] = (static_cast<int64_t>(c) * H + (by * p + dy)) * W + (bx * p + dx);
          }
        }
      }
    }
  }
  return gather_op("patches", chw, {h * w, C * p * p}, std::move(index));
}

Tensor regroup(const Tensor& posmat, int h, int w, int p) {
  require_defined(posmat, "regroup");
  require(posmat.rank() == 2, "regroup", "position matrix required");
  require(posmat.dims()[0] == h * w, "regroup", "grid size mismatch");
  require(p > 0 && h % p == 0 && w % p == 0, "regroup", "patch must divide grid");
  const int C = posmat.dims()[1];
  const int ho = h / p, wo = w / p;
  std::vector<int64_t> index(static_cast<size_t>(ho) * wo * C * p * p);
  size_t k = 0;
  for (int by = 0; by < ho; ++by) {
    for (int bx = 0; bx < wo; ++bx) {
      for (int c = 0; c < C; ++c) {
        for (int dy = 0; dy < p; ++dy) {
          for (int dx = 0; dx < p; ++dx) {
            const int64_t pos = static_cast<int64_t>(by * p + dy) * w + (bx * p + dx);
            index[k++] = pos * C + c;
          }
        }
      }
    }
  }
  return gather_op("regroup", posmat, {ho * wo, C * p * p}, std::move(index));
}

Tensor expand_positions(const Tensor& posmat, int h, int w, int p) {
  require_defined(posmat, "expand_positions");
  require(posmat.rank() == 2, "expand_positions", "position matrix required");
  require(posmat.dims()[0] == h * w, "expand_positions", "grid size mismatch");
  const int cpp = posmat.dims()[1];
  require(p > 0 && cpp % (p * p) == 0, "expand_positions", "channels not divisible by p*p");
  const int C = cpp / (p * p);
  const int ho = h * p, wo = w * p;
  std::vector<int64_t> index(static_cast<size_t>(ho) * wo * C);
  size_t k = 0;
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) {
      const int by = y / p, dy = y % p, bx = x / p, dx = x % p;
      const int64_t pos = static_cast<int64_t>(by) * w + bx;
      for (int c = 0; c < C; ++c) {
        index[k++] = pos * cpp + c * p * p + dy * p + dx;
      }
    }
  }
  return gather_op("expand_positions", posmat, {ho * wo, C}, std::move(index));
}

Tensor neighborhood_concat(const Tensor& posmat, int h, int w, int radius, int dilation) {
  require_defined(posmat, "neighborhood_concat");
  require(posmat.rank() == 2, "neighborhood_concat", "position matrix required");
  require(posmat.dims()[0] == h * w, "neighborhood_concat", "grid size mismatch");
  require(radius >= 0 && dilation >= 1, "neighborhood_concat", "bad radius or dilation");
  const int c = posmat.dims()[1];
  const int side = 2 * radius + 1;
  const int span = side * side;
  // -1 marks zero padding
  std::vector<int64_t> index(static_cast<size_t>(h) * w * span);
  size_t k = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          const int ny = y + dy * dilation, nx = x + dx * dilation;
          index[k++] = (ny < 0 || ny >= h || nx < 0 || nx >= w)
                           ? -1
                           : static_cast<int64_t>(ny) * w + nx;
        }
      }
    }
  }
  std::vector<double> out(static_cast<size_t>(h) * w * span * c, 0.0);
  auto src = posmat.data();
  for (size_t pos = 0; pos < index.size(); ++pos) {
    if (index[pos] < 0) continue;
    std::copy_n(src.begin() + index[pos] * c, c, out.begin() + static_cast<int64_t>(pos) * c);
  }
  return make_op("neighborhood_concat", {h * w, span * c}, std::move(out), {posmat},
                 [index = std::move(index), c](detail::Node& n) {
                   auto& p = *n.parents[0];
                   if (!p.requires_grad) return;
                   p.ensure_grad();
                   for (size_t pos = 0; pos < index.size(); ++pos) {
                     if (index[pos] < 0) continue;
                     const double* g = n.grad.data() + static_cast<int64_t>(pos) * c;
                     double* d = p.grad.data() + index[pos] * c;
                     for (int j = 0; j < c; ++j) d[j] += g[j];
                   }
                 });
}

Tensor pool_positions(const Tensor& posmat, int H, int W, int f) {
  require_defined(posmat, "pool_positions");
  require(posmat.rank() == 2, "pool_positions", "position matrix required");
  require(posmat.dims()[0] == H * W, "pool_positions", "grid size mismatch");
  require(f > 0 && H % f == 0 && W % f == 0, "pool_positions", "factor must divide grid");
  const int K = posmat.dims()[1];
  const int h = H / f, w = W / f;
  const double inv = 1.0 / (f * f);
  std::vector<double> out(static_cast<size_t>(h) * w * K, 0.0);
  auto src = posmat.data();
  for (int by = 0; by < h; ++by) {
    for (int bx = 0; bx < w; ++bx) {
      double* o = out.data() + (static_cast<int64_t>(by) * w + bx) * K;
      for (int dy = 0; dy < f; ++dy) {
        for (int dx = 0; dx < f; ++dx) {
          const double* s = src.data() + (static_cast<int64_t>(by * f + dy) * W + bx * f + dx) * K;
          for (int c = 0; c < K; ++c) o[c] += s[c] * inv;
        }
      }
    }
  }
  return make_op("pool_positions", {h * w, K}, std::move(out), {posmat},
                 [H, W, f, K, h, w, inv](detail::Node& n) {
                   auto& p = *n.parents[0];
                   if (!p.requires_grad) return;
                   p.ensure_grad();
                   for (int by = 0; by < h; ++by) {
                     for (int bx = 0; bx < w; ++bx) {
                       const double* g = n.grad.data() + (static_cast<int64_t>(by) * w + bx) * K;
                       for (int dy = 0; dy < f; ++dy) {
                         for (int dx = 0; dx < f; ++dx) {
                           double* d = p.grad.data() +
                                       (static_cast<int64_t>(by * f + dy) * W + bx * f + dx) * K;
                           for (int c = 0; c < K; ++c) d[c] += g[c] * inv;
                         }
                       }
                     }
                   }
                 });
}

}  // namespace poseadapt
