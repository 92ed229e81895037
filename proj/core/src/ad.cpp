#include "gmrw/ad.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "gmrw/errors.hpp"

namespace gmrw::ad {

namespace {

thread_local bool g_grad_enabled = true;

void accumulate(const NodePtr& p, const Mat& g) {
  if (p->requires_grad) {
    p->ensure_grad();
    p->grad += g;
  }
}

Var make(Mat value, std::vector<Var> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  bool needs_grad = false;
  if (g_grad_enabled) {
    for (const Var& p : parents) needs_grad = needs_grad || p.requires_grad();
  }
  node->requires_grad = needs_grad;
  if (needs_grad) {
    node->parents.reserve(parents.size());
    for (const Var& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": operand shapes differ");
  }
}

}  // namespace

Var Var::constant(Mat value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = false;
  return Var(std::move(node));
}

Var Var::scalar(double value) {
  Mat m(1, 1);
  m(0, 0) = value;
  return constant(std::move(m));
}

Var Var::param(Mat value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

const Mat& Var::grad() const {
  node_->ensure_grad();
  return node_->grad;
}

double Var::item() const {
  if (rows() != 1 || cols() != 1) {
    throw DimensionError("Var::item: node is not 1x1");
  }
  return node_->value(0, 0);
}

void Var::zero_grad() {
  if (node_) {
    node_->grad.setZero(node_->value.rows(), node_->value.cols());
    node_->grad_ready = true;
  }
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

void backward(const Var& root) {
  if (root.rows() != 1 || root.cols() != 1) {
    throw DimensionError("backward: root must be 1x1");
  }
  if (!root.requires_grad()) return;

  // Iterative postorder over the parent DAG; reversed it yields a valid
  // topological order for gradient propagation.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root.node()->ensure_grad();
  root.node()->grad(0, 0) += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) {
      node->ensure_grad();
      node->backward(*node);
    }
  }
}

// ---- elementwise ----

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make(a.value() + b.value(), {a, b},
              [pa = a.node(), pb = b.node()](Node& self) {
                accumulate(pa, self.grad);
                accumulate(pb, self.grad);
              });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  return make(a.value() - b.value(), {a, b},
              [pa = a.node(), pb = b.node()](Node& self) {
                accumulate(pa, self.grad);
                accumulate(pb, -self.grad);
              });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  return make(a.value().cwiseProduct(b.value()), {a, b},
              [pa = a.node(), pb = b.node()](Node& self) {
                accumulate(pa, self.grad.cwiseProduct(pb->value));
                accumulate(pb, self.grad.cwiseProduct(pa->value));
              });
}

Var scale(const Var& a, double s) {
  return make(a.value() * s, {a}, [pa = a.node(), s](Node& self) {
    accumulate(pa, self.grad * s);
  });
}

Var add_const(const Var& a, const Mat& m) {
  if (a.rows() != m.rows() || a.cols() != m.cols()) {
    throw DimensionError("add_const: shapes differ");
  }
  return make(a.value() + m, {a},
              [pa = a.node()](Node& self) { accumulate(pa, self.grad); });
}

Var sub_const(const Var& a, const Mat& m) {
  if (a.rows() != m.rows() || a.cols() != m.cols()) {
    throw DimensionError("sub_const: shapes differ");
  }
  return make(a.value() - m, {a},
              [pa = a.node()](Node& self) { accumulate(pa, self.grad); });
}

Var mul_const(const Var& a, const Mat& m) {
  if (a.rows() != m.rows() || a.cols() != m.cols()) {
    throw DimensionError("mul_const: shapes differ");
  }
  return make(a.value().cwiseProduct(m), {a},
              [pa = a.node(), m](Node& self) {
                accumulate(pa, self.grad.cwiseProduct(m));
              });
}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

Var gelu(const Var& a) {
  Mat y = a.value().unaryExpr(
      [](double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); });
  return make(std::move(y), {a}, [pa = a.node()](Node& self) {
    if (!pa->requires_grad) return;
    Mat d = pa->value.unaryExpr([](double x) {
      return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) +
             x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
    });
    accumulate(pa, self.grad.cwiseProduct(d));
  });
}

Var abs(const Var& a) {
  return make(a.value().cwiseAbs(), {a}, [pa = a.node()](Node& self) {
    if (!pa->requires_grad) return;
    Mat s = pa->value.unaryExpr(
        [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
    accumulate(pa, self.grad.cwiseProduct(s));
  });
}

// ---- linear algebra ----

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw DimensionError("matmul: inner dims differ");
  return make(a.value() * b.value(), {a, b},
              [pa = a.node(), pb = b.node()](Node& self) {
                if (pa->requires_grad) {
                  pa->ensure_grad();
                  pa->grad.noalias() += self.grad * pb->value.transpose();
                }
                if (pb->requires_grad) {
                  pb->ensure_grad();
                  pb->grad.noalias() += pa->value.transpose() * self.grad;
                }
              });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw DimensionError("matmul_nt: inner dims differ");
  return make(a.value() * b.value().transpose(), {a, b},
              [pa = a.node(), pb = b.node()](Node& self) {
                if (pa->requires_grad) {
                  pa->ensure_grad();
                  pa->grad.noalias() += self.grad * pb->value;
                }
                if (pb->requires_grad) {
                  pb->ensure_grad();
                  pb->grad.noalias() += self.grad.transpose() * pa->value;
                }
              });
}

Var matmul_const(const Var& a, const Mat& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul_const: inner dims differ");
  }
  return make(a.value() * b, {a}, [pa = a.node(), b](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad.noalias() += self.grad * b.transpose();
    }
  });
}

Var transpose(const Var& a) {
  return make(a.value().transpose(), {a}, [pa = a.node()](Node& self) {
    accumulate(pa, self.grad.transpose());
  });
}

Var slice_cols(const Var& a, int start, int count) {
  if (start < 0 || count <= 0 || start + count > a.cols()) {
    throw DimensionError("slice_cols: range out of bounds");
  }
  return make(a.value().middleCols(start, count), {a},
              [pa = a.node(), start, count](Node& self) {
                if (pa->requires_grad) {
                  pa->ensure_grad();
                  pa->grad.middleCols(start, count) += self.grad;
                }
              });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no parts");
  Eigen::Index rows = parts[0].rows();
  Eigen::Index total = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw DimensionError("concat_cols: row mismatch");
    total += p.cols();
  }
  Mat y(rows, total);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    y.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<NodePtr> nodes;
  std::vector<Eigen::Index> widths;
  for (const Var& p : parts) {
    nodes.push_back(p.node());
    widths.push_back(p.cols());
  }
  return make(std::move(y), parts, [nodes, widths](Node& self) {
    Eigen::Index at = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      if (nodes[i]->requires_grad) {
        nodes[i]->ensure_grad();
        nodes[i]->grad += self.grad.middleCols(at, widths[i]);
      }
      at += widths[i];
    }
  });
}

// ---- rows as tokens ----

Var add_rowvec(const Var& x, const Var& b) {
  if (b.rows() != 1 || b.cols() != x.cols()) {
    throw DimensionError("add_rowvec: bias must be 1 x cols(x)");
  }
  Mat y = x.value().rowwise() + b.value().row(0);
  return make(std::move(y), {x, b},
              [px = x.node(), pb = b.node()](Node& self) {
                accumulate(px, self.grad);
                if (pb->requires_grad) {
                  pb->ensure_grad();
                  pb->grad.row(0) += self.grad.colwise().sum();
                }
              });
}

Var linear(const Var& x, const Var& w, const Var& b) {
  if (x.cols() != w.rows()) throw DimensionError("linear: inner dims differ");
  if (b.rows() != 1 || b.cols() != w.cols()) {
    throw DimensionError("linear: bias must be 1 x cols(w)");
  }
  Mat y = (x.value() * w.value()).rowwise() + b.value().row(0);
  return make(std::move(y), {x, w, b},
              [px = x.node(), pw = w.node(), pb = b.node()](Node& self) {
                if (px->requires_grad) {
                  px->ensure_grad();
                  px->grad.noalias() += self.grad * pw->value.transpose();
                }
                if (pw->requires_grad) {
                  pw->ensure_grad();
                  pw->grad.noalias() += px->value.transpose() * self.grad;
                }
                if (pb->requires_grad) {
                  pb->ensure_grad();
                  pb->grad.row(0) += self.grad.colwise().sum();
                }
              });
}

namespace {

Mat softmax_rows_of(const Mat& a) {
  Mat y(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    const double m = a.row(i).maxCoeff();
    Eigen::RowVectorXd e = (a.row(i).array() - m).exp();
    y.row(i) = e / e.sum();
  }
  return y;
}

std::function<void(Node&)> softmax_backward(NodePtr pa) {
  return [pa = std::move(pa)](Node& self) {
    if (!pa->requires_grad) return;
    pa->ensure_grad();
    for (Eigen::Index i = 0; i < self.value.rows(); ++i) {
      const Eigen::RowVectorXd g = self.grad.row(i);
      const double dot = g.dot(self.value.row(i));
      pa->grad.row(i) +=
          self.value.row(i).cwiseProduct((g.array() - dot).matrix());
    }
  };
}

}  // namespace

Var row_softmax(const Var& a) {
  return make(softmax_rows_of(a.value()), {a}, softmax_backward(a.node()));
}

Var row_softmax_masked(const Var& a, const Mat& additive_mask) {
  if (a.rows() != additive_mask.rows() || a.cols() != additive_mask.cols()) {
    throw DimensionError("row_softmax_masked: mask shape differs");
  }
  return make(softmax_rows_of(a.value() + additive_mask), {a},
              softmax_backward(a.node()));
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (gain.rows() != 1 || gain.cols() != d || bias.rows() != 1 ||
      bias.cols() != d) {
    throw DimensionError("layer_norm: gain/bias must be 1 x cols(x)");
  }
  Mat xhat(n, d);
  Eigen::VectorXd inv_sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.value().row(i).mean();
    Eigen::RowVectorXd centered = x.value().row(i).array() - mu;
    const double var = centered.squaredNorm() / d;
    inv_sigma(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = centered * inv_sigma(i);
  }
  Mat y = (xhat.array().rowwise() * gain.value().row(0).array()).rowwise() +
          bias.value().row(0).array();
  return make(std::move(y), {x, gain, bias},
              [px = x.node(), pg = gain.node(), pb = bias.node(),
               xhat = std::move(xhat), inv_sigma = std::move(inv_sigma),
               d](Node& self) {
                if (pg->requires_grad) {
                  pg->ensure_grad();
                  pg->grad.row(0) +=
                      self.grad.cwiseProduct(xhat).colwise().sum();
                }
                if (pb->requires_grad) {
                  pb->ensure_grad();
                  pb->grad.row(0) += self.grad.colwise().sum();
                }
                if (px->requires_grad) {
                  px->ensure_grad();
                  for (Eigen::Index i = 0; i < self.value.rows(); ++i) {
                    Eigen::RowVectorXd dxhat =
                        self.grad.row(i).cwiseProduct(pg->value.row(0));
                    const double m1 = dxhat.mean();
                    const double m2 =
                        dxhat.cwiseProduct(xhat.row(i)).mean();
                    px->grad.row(i) +=
                        inv_sigma(i) *
                        (dxhat.array() - m1 - xhat.row(i).array() * m2)
                            .matrix();
                  }
                }
              });
}

// ---- reductions ----

Var sum(const Var& a) {
  Mat y(1, 1);
  y(0, 0) = a.value().sum();
  return make(std::move(y), {a}, [pa = a.node()](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad.array() += self.grad(0, 0);
    }
  });
}

Var mean_all(const Var& a) {
  const double inv = 1.0 / static_cast<double>(a.rows() * a.cols());
  Mat y(1, 1);
  y(0, 0) = a.value().sum() * inv;
  return make(std::move(y), {a}, [pa = a.node(), inv](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad.array() += self.grad(0, 0) * inv;
    }
  });
}

Var weighted_sum(const Var& a, const Mat& weights) {
  if (a.rows() != weights.rows() || a.cols() != weights.cols()) {
    throw DimensionError("weighted_sum: shapes differ");
  }
  Mat y(1, 1);
  y(0, 0) = a.value().cwiseProduct(weights).sum();
  return make(std::move(y), {a}, [pa = a.node(), weights](Node& self) {
    if (pa->requires_grad) {
      pa->ensure_grad();
      pa->grad += self.grad(0, 0) * weights;
    }
  });
}

// ---- convolution ----

namespace {

struct ConvPlan {
  int out_h = 0;
  int out_w = 0;
  // For each output pixel, the 9 source pixel indices (-1 when padded).
  std::vector<int> taps;
};

ConvPlan conv_plan(int h, int w, int stride) {
  ConvPlan plan;
  plan.out_h = (h - 1) / stride + 1;
  plan.out_w = (w - 1) / stride + 1;
  plan.taps.resize(static_cast<std::size_t>(plan.out_h) * plan.out_w * 9);
  std::size_t at = 0;
  for (int oy = 0; oy < plan.out_h; ++oy) {
    for (int ox = 0; ox < plan.out_w; ++ox) {
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const int iy = oy * stride + ky - 1;
          const int ix = ox * stride + kx - 1;
          plan.taps[at++] =
              (iy >= 0 && iy < h && ix >= 0 && ix < w) ? iy * w + ix : -1;
        }
      }
    }
  }
  return plan;
}

Mat gather_cols(const Mat& x, const ConvPlan& plan, int cin) {
  const int n_out = plan.out_h * plan.out_w;
  Mat col = Mat::Zero(n_out, 9 * cin);
  for (int p = 0; p < n_out; ++p) {
    for (int k = 0; k < 9; ++k) {
      const int src = plan.taps[static_cast<std::size_t>(p) * 9 + k];
      if (src >= 0) col.block(p, k * cin, 1, cin) = x.row(src);
    }
  }
  return col;
}

}  // namespace

Var conv3x3(const Var& x, const Var& w, const Var& b, int height, int width,
            int stride) {
  const int cin = static_cast<int>(x.cols());
  if (x.rows() != static_cast<Eigen::Index>(height) * width) {
    throw DimensionError("conv3x3: x rows != height*width");
  }
  if (w.rows() != 9 * cin) throw DimensionError("conv3x3: kernel rows != 9*cin");
  if (stride != 1 && stride != 2) throw DimensionError("conv3x3: stride must be 1 or 2");
  ConvPlan plan = conv_plan(height, width, stride);
  Mat col = gather_cols(x.value(), plan, cin);
  Mat y = (col * w.value()).rowwise() + b.value().row(0);
  return make(std::move(y), {x, w, b},
              [px = x.node(), pw = w.node(), pb = b.node(),
               plan = std::move(plan), cin](Node& self) {
                if (pw->requires_grad) {
                  Mat col = gather_cols(px->value, plan, cin);
                  pw->ensure_grad();
                  pw->grad.noalias() += col.transpose() * self.grad;
                }
                if (pb->requires_grad) {
                  pb->ensure_grad();
                  pb->grad.row(0) += self.grad.colwise().sum();
                }
                if (px->requires_grad) {
                  px->ensure_grad();
                  Mat dcol = self.grad * pw->value.transpose();
                  const int n_out = plan.out_h * plan.out_w;
                  for (int p = 0; p < n_out; ++p) {
                    for (int k = 0; k < 9; ++k) {
                      const int src =
                          plan.taps[static_cast<std::size_t>(p) * 9 + k];
                      if (src >= 0) {
                        px->grad.row(src) += dcol.block(p, k * cin, 1, cin);
                      }
                    }
                  }
                }
              });
}

// ---- task-specific ----

Var cross_entropy_rows(const Var& probs, const Mat& label,
                       const std::vector<std::uint8_t>& valid_rows,
                       double eps) {
  if (probs.rows() != label.rows() || probs.cols() != label.cols()) {
    throw DimensionError("cross_entropy_rows: label shape differs");
  }
  if (static_cast<Eigen::Index>(valid_rows.size()) != probs.rows()) {
    throw DimensionError("cross_entropy_rows: valid mask length differs");
  }
  int n_valid = 0;
  for (auto v : valid_rows) n_valid += v ? 1 : 0;
  if (n_valid == 0) {
    throw NumericError("cross_entropy_rows: all rows masked, loss undefined");
  }
  const double inv = 1.0 / n_valid;
  double loss = 0.0;
  for (Eigen::Index i = 0; i < probs.rows(); ++i) {
    if (!valid_rows[i]) continue;
    for (Eigen::Index j = 0; j < probs.cols(); ++j) {
      const double l = label(i, j);
      if (l == 0.0) continue;
      loss -= l * std::log(std::clamp(probs.value()(i, j), eps, 1.0));
    }
  }
  Mat y(1, 1);
  y(0, 0) = loss * inv;
  return make(std::move(y), {probs},
              [pp = probs.node(), label, valid_rows, eps, inv](Node& self) {
                if (!pp->requires_grad) return;
                pp->ensure_grad();
                const double g = self.grad(0, 0) * inv;
                for (Eigen::Index i = 0; i < label.rows(); ++i) {
                  if (!valid_rows[i]) continue;
                  for (Eigen::Index j = 0; j < label.cols(); ++j) {
                    const double l = label(i, j);
                    if (l == 0.0) continue;
                    const double p = pp->value(i, j);
                    if (p > eps && p < 1.0) {
                      pp->grad(i, j) -= g * l / p;
                    }
                  }
                }
              });
}

namespace {

// direction 0: second difference along x (columns), 1: along y (rows).
Var second_diff(const Var& f, int grid_rows, int grid_cols, int direction) {
  if (f.rows() != static_cast<Eigen::Index>(grid_rows) * grid_cols) {
    throw DimensionError("second_diff: rows != grid_rows*grid_cols");
  }
  const int extent = direction == 0 ? grid_cols : grid_rows;
  if (extent < 3) {
    throw DimensionError("second_diff: fewer than 3 cells in direction");
  }
  const int step = direction == 0 ? 1 : grid_cols;
  Mat y = Mat::Zero(f.rows(), f.cols());
  for (int r = 0; r < grid_rows; ++r) {
    for (int q = 0; q < grid_cols; ++q) {
      const int along = direction == 0 ? q : r;
      if (along == 0 || along == extent - 1) continue;
      const int i = r * grid_cols + q;
      y.row(i) = f.value().row(i - step) + f.value().row(i + step) -
                 2.0 * f.value().row(i);
    }
  }
  return make(std::move(y), {f},
              [pf = f.node(), grid_rows, grid_cols, direction, step,
               extent](Node& self) {
                if (!pf->requires_grad) return;
                pf->ensure_grad();
                for (int r = 0; r < grid_rows; ++r) {
                  for (int q = 0; q < grid_cols; ++q) {
                    const int along = direction == 0 ? q : r;
                    if (along == 0 || along == extent - 1) continue;
                    const int i = r * grid_cols + q;
                    pf->grad.row(i - step) += self.grad.row(i);
                    pf->grad.row(i + step) += self.grad.row(i);
                    pf->grad.row(i) -= 2.0 * self.grad.row(i);
                  }
                }
              });
}

}  // namespace

Var second_diff_x(const Var& f, int grid_rows, int grid_cols) {
  return second_diff(f, grid_rows, grid_cols, 0);
}

Var second_diff_y(const Var& f, int grid_rows, int grid_cols) {
  return second_diff(f, grid_rows, grid_cols, 1);
}

Var huber_norm_loss(const Var& pred, const Mat& target, double delta) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("huber_norm_loss: shapes differ");
  }
  if (delta <= 0.0) throw RangeError("huber_norm_loss: delta must be > 0");
  const Eigen::Index n = pred.rows();
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = (pred.value().row(i) - target.row(i)).norm();
    loss += r <= delta ? 0.5 * r * r : delta * (r - 0.5 * delta);
  }
  Mat y(1, 1);
  y(0, 0) = loss / n;
  return make(std::move(y), {pred},
              [pp = pred.node(), target, delta, n](Node& self) {
                if (!pp->requires_grad) return;
                pp->ensure_grad();
                const double g = self.grad(0, 0) / n;
                for (Eigen::Index i = 0; i < n; ++i) {
                  Eigen::RowVectorXd e = pp->value.row(i) - target.row(i);
                  const double r = e.norm();
                  if (r == 0.0) continue;
                  pp->grad.row(i) += g * (r <= delta ? e : (delta / r) * e);
                }
              });
}

}  // namespace gmrw::ad
