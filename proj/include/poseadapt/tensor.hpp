#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace poseadapt {

namespace detail {

// One vertex of the backward graph. Ops allocate a fresh node per result;
// leaves (parameters, inputs) have no parents. Graphs are DAGs of shared_ptr
// parent edges, so releasing the result tensor frees all intermediates.
struct Node {
  std::vector<int> dims;
  std::vector<double> data;
  std::vector<double> grad;  // lazily allocated, same length as data
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward;

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
  }
};

}  // namespace detail

// Dense float64 tensor with reverse-mode differentiation. Value-semantic
// handle: copies share the underlying node. Only leaves are mutated in place
// (by the optimizer); op results are immutable once built.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> n) : node_(std::move(n)) {}

  static Tensor zeros(std::vector<int> dims, bool requires_grad = false);
  static Tensor full(std::vector<int> dims, double value, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  static Tensor from_data(std::vector<int> dims, std::vector<double> data,
                          bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const std::vector<int>& dims() const { return node_->dims; }
  int rank() const { return static_cast<int>(node_->dims.size()); }
  int64_t numel() const { return node_->numel(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }

  std::span<const double> data() const { return node_->data; }
  // In-place mutation is reserved for leaves (parameters, test fixtures).
  std::span<double> mutable_data() { return node_->data; }
  std::span<const double> grad() const { return node_->grad; }

  double value() const;                    // requires numel() == 1
  double at(std::initializer_list<int> idx) const;

  // Reverse pass from a scalar; accumulates into .grad of every
  // requires_grad node reachable through the graph.
  void backward();
  void zero_grad();

  // Constant copy with no graph attached.
  Tensor detach() const;

  std::shared_ptr<detail::Node> node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// Every op validates that its output is finite when enabled (default on).
// Non-finite values throw std::runtime_error naming the op.
void set_finite_checks(bool on);
bool finite_checks_enabled();

// Building block shared by all ops, public so composite modules can define
// fused ops: result requires grad iff any parent does; otherwise parents and
// backward are dropped and the value flows as a constant.
Tensor make_op(const char* name, std::vector<int> dims, std::vector<double> data,
               std::vector<Tensor> parents, std::function<void(detail::Node&)> backward);

// elementwise
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add_c(const Tensor& a, double c);
Tensor mul_c(const Tensor& a, double c);
Tensor scale(const Tensor& a, const Tensor& s);  // s has numel 1
Tensor add_rowwise(const Tensor& a, const Tensor& b);  // a: m x n, b: n
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
Tensor vexp(const Tensor& a);
Tensor vlog(const Tensor& a);
Tensor vsqrt(const Tensor& a);
Tensor vabs(const Tensor& a);
Tensor plogp(const Tensor& a);  // x*ln(x), defined 0 at x <= 0

// shape
Tensor reshape(const Tensor& a, std::vector<int> dims);
Tensor transpose2d(const Tensor& a);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor row(const Tensor& a, int i);  // row i of a 2-D tensor as a 1-D tensor

// linear algebra / reductions
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
Tensor softmax(const Tensor& a, int axis);
Tensor cosine_similarity(const Tensor& a, const Tensor& b);  // zero vectors -> 0

// position-major feature-map movement. A feature map is a (h*w) x C matrix
// whose rows scan the grid row-major.
//   patches:  C x H x W image -> (H/p * W/p) x (C*p*p) patch rows
//   regroup:  (h*w) x C map   -> (h/p * w/p) x (C*p*p), gathering p x p blocks
//   expand:   (h*w) x (C*p*p) -> (h*p * w*p) x C, the inverse scatter
//   pool:     (H*W) x K map   -> (H/f * W/f) x K, mean over f x f blocks
//   neighborhood: (h*w) x C   -> (h*w) x (C*(2r+1)^2), each row the
//       concatenated features of its (2r+1)^2 dilated neighbors,
//       zero-padded at the borders
Tensor patches(const Tensor& chw, int p);
Tensor regroup(const Tensor& posmat, int h, int w, int p);
Tensor expand_positions(const Tensor& posmat, int h, int w, int p);
Tensor pool_positions(const Tensor& posmat, int H, int W, int f);
Tensor neighborhood_concat(const Tensor& posmat, int h, int w, int radius, int dilation = 1);

}  // namespace poseadapt
