#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

namespace gmrw::ad {

// Minimal reverse-mode automatic differentiation over dense double matrices.
// A Var wraps a graph node; operations allocate result nodes that remember
// their parents and a pull-style backward function. Everything is computed in
// 64-bit arithmetic so analytic gradients can be validated against central
// finite differences at tight tolerances.

using Mat = Eigen::MatrixXd;

struct Node;
using NodePtr = std::shared_ptr<Node>;

struct Node {
  Mat value;
  Mat grad;
  bool requires_grad = false;
  bool grad_ready = false;
  std::vector<NodePtr> parents;
  // Pulls this node's grad into the parents' grads. Receives the node itself
  // so closures never have to capture it (which would create a cycle).
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (!grad_ready) {
      grad = Mat::Zero(value.rows(), value.cols());
      grad_ready = true;
    }
  }
};

class Var {
 public:
  Var() = default;
  explicit Var(NodePtr node) : node_(std::move(node)) {}

  static Var constant(Mat value);
  static Var scalar(double value);
  static Var param(Mat value);  // requires_grad = true

  bool defined() const { return node_ != nullptr; }
  const Mat& value() const { return node_->value; }
  Mat& value() { return node_->value; }
  const Mat& grad() const;
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double item() const;  // value of a 1x1 node
  void zero_grad();

  NodePtr node() const { return node_; }

 private:
  NodePtr node_;
};

// While a NoGradGuard is alive on a thread, ops do not record the graph;
// results are plain values that free their inputs as soon as possible.
bool grad_enabled();
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// Runs reverse accumulation from a 1x1 root. Gradients accumulate into every
// reachable node with requires_grad set; call zero_grad on parameters between
// steps.
void backward(const Var& root);

// ---- elementwise and scalar ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_const(const Var& a, const Mat& m);
Var sub_const(const Var& a, const Mat& m);
Var mul_const(const Var& a, const Mat& m);  // elementwise by a constant
Var gelu(const Var& a);
Var abs(const Var& a);

// ---- linear algebra ----
Var matmul(const Var& a, const Var& b);
Var matmul_nt(const Var& a, const Var& b);  // a * b^T
Var matmul_const(const Var& a, const Mat& b);
Var transpose(const Var& a);
Var slice_cols(const Var& a, int start, int count);
Var concat_cols(const std::vector<Var>& parts);

// ---- rows as tokens ----
Var add_rowvec(const Var& x, const Var& b);          // b is 1 x d
Var linear(const Var& x, const Var& w, const Var& b);  // x*w + b
Var row_softmax(const Var& a);
Var row_softmax_masked(const Var& a, const Mat& additive_mask);
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// ---- reductions ----
Var sum(const Var& a);
Var mean_all(const Var& a);
Var weighted_sum(const Var& a, const Mat& weights);  // sum(a .* weights)

// ---- convolution on flattened (h*w) x c feature maps ----
// x is (h*w) x cin row-major by pixel; w is (9*cin) x cout; b is 1 x cout.
// 3x3 kernel, zero padding 1, stride 1 or 2.
Var conv3x3(const Var& x, const Var& w, const Var& b, int height, int width,
            int stride);

// ---- task-specific ops ----
// Mean over valid rows of -sum_j label(i,j) * log(clamp(p(i,j), eps, 1)).
Var cross_entropy_rows(const Var& probs, const Mat& label,
                       const std::vector<std::uint8_t>& valid_rows,
                       double eps);
// Central second difference along grid x / y. f is (gh*gw) x k; border rows
// (in the differencing direction) are zero.
Var second_diff_x(const Var& f, int grid_rows, int grid_cols);
Var second_diff_y(const Var& f, int grid_rows, int grid_cols);
// Mean over rows of the Huber penalty applied to the row-wise L2 error
// between pred (n x k) and target.
Var huber_norm_loss(const Var& pred, const Mat& target, double delta);

}  // namespace gmrw::ad
