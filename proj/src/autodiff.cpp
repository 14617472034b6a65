#include "hyq/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "hyq/error.hpp"
#include "hyq/hyperbolic.hpp"

namespace hyq::ad {

Parameter::Parameter(std::string name_, Matrix value_)
    : name(std::move(name_)),
      value(std::move(value_)),
      grad(Matrix::Zero(value.rows(), value.cols())),
      first_moment(Matrix::Zero(value.rows(), value.cols())),
      second_moment(Matrix::Zero(value.rows(), value.cols())) {}

Parameter& ParameterSet::add(std::string name, Matrix value) {
  if (contains(name)) throw UsageError("duplicate parameter '" + name + "'");
  return params_.emplace_back(std::move(name), std::move(value));
}

Parameter& ParameterSet::at(std::string_view name) {
  for (auto& p : params_) {
    if (p.name == name) return p;
  }
  throw LookupError("no parameter named '" + std::string(name) + "'");
}

const Parameter& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

bool ParameterSet::contains(std::string_view name) const {
  return std::any_of(params_.begin(), params_.end(), [&](const Parameter& p) { return p.name == name; });
}

void ParameterSet::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

// ---------------------------------------------------------------------------

const Matrix& Tensor::value() const {
  if (!tape_) throw UsageError("use of an empty tensor handle");
  return tape_->value(id_);
}

bool Tensor::traced() const { return tape_ && tape_->traced(id_); }

Tensor Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Tensor(this, static_cast<int>(nodes_.size() - 1));
}

Tensor Tape::constant(Matrix value) { return push({std::move(value), {}, false, nullptr, {}}); }

Tensor Tape::variable(Matrix value) { return push({std::move(value), {}, true, nullptr, {}}); }

Tensor Tape::parameter(Parameter& p) {
  return push({p.value, {}, p.trainable, p.trainable ? &p : nullptr, {}});
}

Tensor Tape::record(const char* op, Matrix value, std::span<const Tensor> inputs, Backward backward) {
  if (!value.allFinite()) throw NumericError(std::string(op) + ": non-finite result");
  bool traced = false;
  for (const auto& t : inputs) {
    if (&t.tape() != this) throw UsageError(std::string(op) + ": operands live on different tapes");
    traced = traced || t.traced();
  }
  return push({std::move(value), {}, traced, nullptr, traced ? std::move(backward) : Backward{}});
}

void Tape::accumulate(const Tensor& t, const Matrix& g) {
  auto& node = nodes_[static_cast<std::size_t>(t.id())];
  if (!node.traced) return;
  if (node.grad.size() == 0) {
    node.grad = g;
  } else {
    node.grad += g;
  }
}

void Tape::accumulate(const Tensor& t, Matrix&& g) {
  auto& node = nodes_[static_cast<std::size_t>(t.id())];
  if (!node.traced) return;
  if (node.grad.size() == 0) {
    node.grad = std::move(g);
  } else {
    node.grad += g;
  }
}

void Tape::backward(const Tensor& loss) {
  if (&loss.tape() != this) throw UsageError("backward: loss lives on another tape");
  if (!loss.traced()) throw UsageError("backward: loss does not depend on any traced tensor");
  if (loss.rows() != 1 || loss.cols() != 1) throw UsageError("backward: loss must be 1x1");
  for (auto& n : nodes_) n.grad.resize(0, 0);
  nodes_[static_cast<std::size_t>(loss.id())].grad = Matrix::Ones(1, 1);
  for (int id = loss.id(); id >= 0; --id) {
    auto& node = nodes_[static_cast<std::size_t>(id)];
    if (!node.traced || node.grad.size() == 0) continue;
    if (node.backward) node.backward(*this, node.grad);
    if (node.param) node.param->grad += node.grad;
  }
}

Matrix Tape::grad(const Tensor& t) const {
  const auto& node = nodes_[static_cast<std::size_t>(t.id())];
  if (node.grad.size() == 0) return Matrix::Zero(node.value.rows(), node.value.cols());
  return node.grad;
}

// ---------------------------------------------------------------------------

namespace {

void require(bool ok, const char* op, const char* what) {
  if (!ok) throw DimensionError(std::string(op) + ": " + what);
}

void same_shape(const Tensor& a, const Tensor& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), op, "operand shapes differ");
}

template <std::size_t N>
Tensor emit(const char* op, Matrix value, const std::array<Tensor, N>& inputs, Tape::Backward fn) {
  return inputs[0].tape().record(op, std::move(value), inputs, std::move(fn));
}

double tanh_ratio_deriv(double u) {
  if (u < detail::kSeriesCutoff) return -2.0 * u / 3.0 + 8.0 * u * u * u / 15.0;
  const double t = std::tanh(u);
  return (1.0 - t * t) / u - t / (u * u);
}

double artanh_ratio_deriv(double w) {
  if (w < detail::kSeriesCutoff) return 2.0 * w / 3.0 + 4.0 * w * w * w / 5.0;
  return 1.0 / (w * (1.0 - w * w)) - std::atanh(w) / (w * w);
}

double curvature_of(const Tensor& c, const char* op) {
  require(c.rows() == 1 && c.cols() == 1, op, "curvature must be 1x1");
  const double value = c.value()(0, 0);
  if (!(value > 0.0)) throw NumericError(std::string(op) + ": curvature must be positive");
  return value;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul", "inner dimensions differ");
  Matrix out = a.value() * b.value();
  return emit<2>("matmul", std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.traced()) t.accumulate(a, Matrix(g * b.value().transpose()));
    if (b.traced()) t.accumulate(b, Matrix(a.value().transpose() * g));
  });
}

Tensor sparse_dense_matmul(std::shared_ptr<const SparseMatrix> a, const Tensor& x) {
  require(a->cols() == x.rows(), "sparse_dense_matmul", "inner dimensions differ");
  Matrix out = *a * x.value();
  return emit<1>("sparse_dense_matmul", std::move(out), {x},
                 [a, x](Tape& t, const Matrix& g) { t.accumulate(x, Matrix(a->transpose() * g)); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "add");
  return emit<2>("add", a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "sub");
  return emit<2>("sub", a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, Matrix(-g));
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  same_shape(a, b, "mul");
  return emit<2>("mul", a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (a.traced()) t.accumulate(a, Matrix(g.cwiseProduct(b.value())));
    if (b.traced()) t.accumulate(b, Matrix(g.cwiseProduct(a.value())));
  });
}

Tensor scale(const Tensor& a, double s) {
  return emit<1>("scale", a.value() * s, {a}, [a, s](Tape& t, const Matrix& g) { t.accumulate(a, Matrix(g * s)); });
}

Tensor add_scalar(const Tensor& a, double s) {
  Matrix out = a.value().array() + s;
  return emit<1>("add_scalar", std::move(out), {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Tensor row_broadcast_mul(const Tensor& a, const Tensor& w) {
  require(w.cols() == 1 && w.rows() == a.rows(), "row_broadcast_mul", "weights must be a column with one entry per row");
  Matrix out = w.value().col(0).asDiagonal() * a.value();
  return emit<2>("row_broadcast_mul", std::move(out), {a, w}, [a, w](Tape& t, const Matrix& g) {
    if (a.traced()) t.accumulate(a, Matrix(w.value().col(0).asDiagonal() * g));
    if (w.traced()) t.accumulate(w, Matrix(g.cwiseProduct(a.value()).rowwise().sum()));
  });
}

Tensor add_row(const Tensor& a, const Tensor& b) {
  require(b.rows() == 1 && b.cols() == a.cols(), "add_row", "bias must be 1 x cols");
  Matrix out = a.value().rowwise() + b.value().row(0);
  return emit<2>("add_row", std::move(out), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (b.traced()) t.accumulate(b, Matrix(g.colwise().sum()));
  });
}

Tensor tanh(const Tensor& a) {
  Matrix out = a.value().array().tanh();
  Tensor result = emit<1>("tanh", out, {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix(g.array() * (1.0 - out.array().square())));
  });
  return result;
}

Tensor arctanh_clamped(const Tensor& a) {
  const Matrix clamped = a.value().cwiseMax(-kArtanhLimit).cwiseMin(kArtanhLimit);
  Matrix out = clamped.unaryExpr([](double x) { return std::atanh(x); });
  return emit<1>("arctanh_clamped", std::move(out), {a}, [a, clamped](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix(g.array() / (1.0 - clamped.array().square())));
  });
}

Tensor sigmoid(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return emit<1>("sigmoid", out, {a}, [a, out](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix(g.array() * out.array() * (1.0 - out.array())));
  });
}

Tensor relu(const Tensor& a) {
  Matrix out = a.value().cwiseMax(0.0);
  return emit<1>("relu", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix((a.value().array() > 0.0).select(g, 0.0)));
  });
}

Tensor softplus(const Tensor& a) {
  Matrix out = a.value().unaryExpr([](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); });
  return emit<1>("softplus", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    const Matrix s = a.value().unaryExpr([](double x) {
      if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
      const double e = std::exp(x);
      return e / (1.0 + e);
    });
    t.accumulate(a, Matrix(g.cwiseProduct(s)));
  });
}

Tensor log(const Tensor& a) {
  if ((a.value().array() <= 0.0).any()) throw NumericError("log: non-positive input");
  Matrix out = a.value().array().log();
  return emit<1>("log", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix(g.array() / a.value().array()));
  });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  Matrix out = a.value().cwiseMax(lo).cwiseMin(hi);
  return emit<1>("clamp", std::move(out), {a}, [a, lo, hi](Tape& t, const Matrix& g) {
    const auto& x = a.value().array();
    t.accumulate(a, Matrix((x >= lo && x <= hi).select(g, 0.0)));
  });
}

Tensor clamp_unit(const Tensor& a) {
  Matrix out = a.value().cwiseMax(0.0).cwiseMin(1.0);
  return emit<1>("clamp_unit", std::move(out), {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

Tensor sum(const Tensor& a) {
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return emit<1>("sum", std::move(out), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

Tensor mean(const Tensor& a) {
  require(a.value().size() > 0, "mean", "empty tensor");
  const auto n = static_cast<double>(a.value().size());
  Matrix out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return emit<1>("mean", std::move(out), {a}, [a, n](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0) / n));
  });
}

Tensor row_norm(const Tensor& a) {
  Matrix out = a.value().rowwise().norm();
  return emit<1>("row_norm", out, {a}, [a, out](Tape& t, const Matrix& g) {
    const Eigen::VectorXd inv = (g.col(0).array() / out.col(0).array().max(kMinNorm)).matrix();
    t.accumulate(a, Matrix(inv.asDiagonal() * a.value()));
  });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  require(!parts.empty(), "concat_rows", "no inputs");
  const auto cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    require(p.cols() == cols, "concat_rows", "column counts differ");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index offset = 0;
  for (const auto& p : parts) {
    out.middleRows(offset, p.rows()) = p.value();
    offset += p.rows();
  }
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return parts[0].tape().record("concat_rows", std::move(out), inputs, [inputs](Tape& t, const Matrix& g) {
    Eigen::Index off = 0;
    for (const auto& p : inputs) {
      if (p.traced()) t.accumulate(p, Matrix(g.middleRows(off, p.rows())));
      off += p.rows();
    }
  });
}

Tensor gather_rows(const Tensor& a, std::span<const std::uint32_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= a.rows()) throw BoundsError("gather_rows: row index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  std::vector<std::uint32_t> idx(rows.begin(), rows.end());
  return emit<1>("gather_rows", std::move(out), {a}, [a, idx = std::move(idx)](Tape& t, const Matrix& g) {
    Matrix acc = Matrix::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) acc.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    t.accumulate(a, std::move(acc));
  });
}

// ---------------------------------------------------------------------------
// Fused Poincaré maps. Per row with n = max(|x|, 1e-15) and s = sqrt(c):
//   expmap0: out = g(s n) v,  g(u) = tanh(u) / u
//   logmap0: out = h(s n) y,  h(w) = artanh(w) / w
// so dL/dx = ratio * G + (G.x) ratio'(s n) s x / n and
//    dL/dc = sum_rows (G.x) ratio'(s n) n / (2 s).

Tensor expmap0(const Tensor& v, const Tensor& c) {
  const double cv = curvature_of(c, "expmap0");
  const double s = std::sqrt(cv);
  const Eigen::VectorXd norms = v.value().rowwise().norm().cwiseMax(kMinNorm);
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) out.row(i) = detail::tanh_ratio(s * norms(i)) * v.value().row(i);
  return emit<2>("expmap0", std::move(out), {v, c}, [v, c, s, norms](Tape& t, const Matrix& g) {
    Matrix gv(v.rows(), v.cols());
    double gc = 0.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double n = norms(i);
      const double u = s * n;
      const double a = g.row(i).dot(v.value().row(i));
      const double d = tanh_ratio_deriv(u);
      gv.row(i) = detail::tanh_ratio(u) * g.row(i) + (a * d * s / n) * v.value().row(i);
      gc += a * d * n / (2.0 * s);
    }
    if (v.traced()) t.accumulate(v, std::move(gv));
    if (c.traced()) t.accumulate(c, Matrix::Constant(1, 1, gc));
  });
}

Tensor logmap0(const Tensor& y, const Tensor& c) {
  const double cv = curvature_of(c, "logmap0");
  const double s = std::sqrt(cv);
  const Eigen::VectorXd norms = y.value().rowwise().norm().cwiseMax(kMinNorm);
  Matrix out(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const double w = s * norms(i);
    if (w >= 1.0) throw NumericError("logmap0: point outside the ball");
    const double ratio = w <= kArtanhLimit ? detail::artanh_ratio(w) : std::atanh(kArtanhLimit) / w;
    out.row(i) = ratio * y.value().row(i);
  }
  return emit<2>("logmap0", std::move(out), {y, c}, [y, c, s, norms](Tape& t, const Matrix& g) {
    Matrix gy(y.rows(), y.cols());
    double gc = 0.0;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
      const double n = norms(i);
      const double w = s * n;
      const double a = g.row(i).dot(y.value().row(i));
      double ratio, d;
      if (w <= kArtanhLimit) {
        ratio = detail::artanh_ratio(w);
        d = artanh_ratio_deriv(w);
      } else {
        ratio = std::atanh(kArtanhLimit) / w;
        d = -std::atanh(kArtanhLimit) / (w * w);
      }
      gy.row(i) = ratio * g.row(i) + (a * d * s / n) * y.value().row(i);
      gc += a * d * n / (2.0 * s);
    }
    if (y.traced()) t.accumulate(y, std::move(gy));
    if (c.traced()) t.accumulate(c, Matrix::Constant(1, 1, gc));
  });
}

// Rows at or beyond the threshold become K y / |y| with
// K = (1 - eps)(1 - margin) / sqrt(c); other rows pass through.
Tensor ball_project(const Tensor& y, const Tensor& c) {
  const double cv = curvature_of(c, "ball_project");
  const double s = std::sqrt(cv);
  const double limit = (1.0 - kBallEps) / s;
  const double k = limit * (1.0 - kProjectMargin);
  Matrix out = y.value();
  std::vector<Eigen::Index> clipped;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double n = out.row(i).norm();
    if (n >= limit) {
      out.row(i) *= k / n;
      clipped.push_back(i);
    }
  }
  return emit<2>("ball_project", std::move(out), {y, c}, [y, c, k, cv, clipped](Tape& t, const Matrix& g) {
    Matrix gy = g;
    double gc = 0.0;
    for (auto i : clipped) {
      const auto row = y.value().row(i);
      const double n = row.norm();
      const double a = g.row(i).dot(row);
      gy.row(i) = (k / n) * (g.row(i) - (a / (n * n)) * row);
      gc += -a * k / (2.0 * cv * n);
    }
    if (y.traced()) t.accumulate(y, std::move(gy));
    if (c.traced()) t.accumulate(c, Matrix::Constant(1, 1, gc));
  });
}

// ---------------------------------------------------------------------------

void adam_step(ParameterSet& params, const AdamConfig& config) {
  ++params.adam_steps;
  const auto step = static_cast<double>(params.adam_steps);
  const double bias1 = 1.0 - std::pow(config.beta1, step);
  const double bias2 = 1.0 - std::pow(config.beta2, step);
  for (auto& p : params) {
    if (p.trainable) {
      p.first_moment = config.beta1 * p.first_moment + (1.0 - config.beta1) * p.grad;
      p.second_moment = config.beta2 * p.second_moment + (1.0 - config.beta2) * p.grad.cwiseAbs2();
      p.value.array() -= config.lr * (p.first_moment.array() / bias1) /
                         ((p.second_moment.array() / bias2).sqrt() + config.eps);
    }
    p.zero_grad();
  }
}

}  // namespace hyq::ad
