#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records every operation applied to traced tensors in creation order,
// which is already a topological order, so backward() walks the node list once
// from the loss towards the leaves. Tensors are lightweight handles into the
// tape; the tape must outlive them.

#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace hyq::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A learnable tensor with its gradient accumulator and Adam moments.
struct Parameter {
  Parameter(std::string name_, Matrix value_);

  std::string name;
  Matrix value;
  Matrix grad;
  Matrix first_moment;
  Matrix second_moment;
  bool trainable = true;

  void zero_grad() { grad.setZero(); }
};

/// Owns parameters at stable addresses, in insertion order.
class ParameterSet {
 public:
  Parameter& add(std::string name, Matrix value);
  Parameter& at(std::string_view name);
  const Parameter& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.cbegin(); }
  auto end() const { return params_.cend(); }

  void zero_grad();
  std::uint64_t adam_steps = 0;

 private:
  std::deque<Parameter> params_;
};

class Tape;

/// Handle to one node of a tape.
class Tensor {
 public:
  Tensor() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Whether gradients flow through this tensor.
  bool traced() const;
  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Tensor(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  /// Receives dL/d(output) and accumulates into the inputs via accumulate().
  using Backward = std::function<void(Tape&, const Matrix& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Untraced value.
  Tensor constant(Matrix value);
  /// Traced leaf not bound to a Parameter; read its gradient with grad().
  Tensor variable(Matrix value);
  /// Traced leaf whose gradient is added to `p.grad` by backward(). A
  /// non-trainable parameter enters as a constant.
  Tensor parameter(Parameter& p);

  /// Records an operation result. `op` names the primitive in numeric errors.
  Tensor record(const char* op, Matrix value, std::span<const Tensor> inputs, Backward backward);

  /// Reverse sweep from a traced 1x1 loss. Gradients accumulate: calling it
  /// twice without zeroing parameters doubles their gradients.
  void backward(const Tensor& loss);

  /// Gradient of a traced node after backward(); zeros if it was unreachable.
  Matrix grad(const Tensor& t) const;

  void accumulate(const Tensor& t, const Matrix& g);
  void accumulate(const Tensor& t, Matrix&& g);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  bool traced(int id) const { return nodes_[static_cast<std::size_t>(id)].traced; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool traced = false;
    Parameter* param = nullptr;
    Backward backward;
  };

  Tensor push(Node node);

  std::deque<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Primitives. Each checks shapes (DimensionError) and that its result is
// finite (NumericError naming the op).

Tensor matmul(const Tensor& a, const Tensor& b);
/// A * x for a fixed sparse A; gradient A^T * g flows to x only.
Tensor sparse_dense_matmul(std::shared_ptr<const SparseMatrix> a, const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
/// Elementwise product.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
Tensor add_scalar(const Tensor& a, double s);
/// out(i, j) = a(i, j) * w(i) for a column w with one entry per row.
Tensor row_broadcast_mul(const Tensor& a, const Tensor& w);
/// out(i, j) = a(i, j) + b(j) for a 1 x cols row b.
Tensor add_row(const Tensor& a, const Tensor& b);
Tensor tanh(const Tensor& a);
/// artanh after clamping into [-1 + 1e-7, 1 - 1e-7]; the derivative is
/// 1 / (1 - x^2) evaluated at the clamped x.
Tensor arctanh_clamped(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor softplus(const Tensor& a);
/// Natural log; every entry must be positive.
Tensor log(const Tensor& a);
/// Clamp into [lo, hi]; gradient is zero where a bound is active.
Tensor clamp(const Tensor& a, double lo, double hi);
/// Clamp into [0, 1] with identity gradient; only absorbs rounding.
Tensor clamp_unit(const Tensor& a);
/// 1x1 sum of all entries.
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
/// Column of row Euclidean norms (floored at 1e-15 in the backward pass).
Tensor row_norm(const Tensor& a);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> rows);

// Fused Poincaré maps with a traced 1x1 curvature c.
Tensor expmap0(const Tensor& v, const Tensor& c);
Tensor logmap0(const Tensor& y, const Tensor& c);
Tensor ball_project(const Tensor& y, const Tensor& c);

// ---------------------------------------------------------------------------

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update over all trainable parameters, then zeroes
/// every gradient.
void adam_step(ParameterSet& params, const AdamConfig& config = {});

}  // namespace hyq::ad
