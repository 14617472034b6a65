#pragma once

// Poincaré-ball primitives with curvature -c (ball radius 1/sqrt(c)).
// Every function works on a batch: each row of the input is one point or one
// tangent vector at the origin, and the whole batch shares one curvature.

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "hyq/error.hpp"

namespace hyq {

template <typename Scalar>
using Points = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Pointsd = Points<double>;

/// Exported points satisfy sqrt(c) * |x| <= 1 - kBallEps.
inline constexpr double kBallEps = 1e-5;
/// Upper clamp on every artanh argument.
inline constexpr double kArtanhLimit = 1.0 - 1e-7;
/// Norms are floored here before any division.
inline constexpr double kMinNorm = 1e-15;
/// project_to_ball lands this fraction inside the threshold so a second
/// projection is the identity bit-for-bit.
inline constexpr double kProjectMargin = 1e-12;

template <typename Scalar = double>
class Curvature {
 public:
  explicit Curvature(Scalar c) : c_(c) {
    using std::isfinite;
    if (!(c > Scalar(0)) || !isfinite(c)) throw ValidationError("curvature must be positive and finite");
  }
  Scalar value() const { return c_; }
  Scalar sqrt() const {
    using std::sqrt;
    return sqrt(c_);
  }
  Scalar radius() const { return Scalar(1) / sqrt(); }

 private:
  Scalar c_;
};

namespace detail {

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& x, const char* op) {
  if (!x.allFinite()) throw NumericError(std::string(op) + ": non-finite input");
}

template <typename A, typename B>
void require_same_shape(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y, const char* op) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) throw DimensionError(std::string(op) + ": shape mismatch");
}

// Below this argument the ratios below switch to their Taylor series.
inline constexpr double kSeriesCutoff = 1e-3;

/// tanh(u) / u for u >= 0, continuous at 0.
template <typename Scalar>
Scalar tanh_ratio(Scalar u) {
  using std::tanh;
  const Scalar u2 = u * u;
  if (u < Scalar(kSeriesCutoff)) return Scalar(1) - u2 / Scalar(3) + Scalar(2) * u2 * u2 / Scalar(15);
  return tanh(u) / u;
}

/// artanh(w) / w for 0 <= w < 1, continuous at 0.
template <typename Scalar>
Scalar artanh_ratio(Scalar w) {
  using std::atanh;
  const Scalar w2 = w * w;
  if (w < Scalar(kSeriesCutoff)) return Scalar(1) + w2 / Scalar(3) + w2 * w2 / Scalar(5);
  return atanh(w) / w;
}

}  // namespace detail

/// Rescale rows with sqrt(c)|x| >= 1 - kBallEps back inside the ball.
template <typename Derived>
Points<typename Derived::Scalar> project_to_ball(const Eigen::MatrixBase<Derived>& x,
                                                 Curvature<typename Derived::Scalar> c) {
  using S = typename Derived::Scalar;
  detail::require_finite(x, "project_to_ball");
  Points<S> out = x;
  const S limit = S(1 - kBallEps) / c.sqrt();
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const S n = out.row(i).norm();
    if (n >= limit) out.row(i) *= limit * S(1 - kProjectMargin) / n;
  }
  return out;
}

/// Möbius addition x ⊕_c y (gyrovector convention), row by row.
template <typename A, typename B>
Points<typename A::Scalar> mobius_add(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y,
                                      Curvature<typename A::Scalar> curvature) {
  using S = typename A::Scalar;
  detail::require_same_shape(x, y, "mobius_add");
  detail::require_finite(x, "mobius_add");
  detail::require_finite(y, "mobius_add");
  const S c = curvature.value();
  Points<S> out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const S xy = x.row(i).dot(y.row(i));
    const S x2 = x.row(i).squaredNorm();
    const S y2 = y.row(i).squaredNorm();
    const S num_x = S(1) + S(2) * c * xy + c * y2;
    const S num_y = S(1) - c * x2;
    S den = S(1) + S(2) * c * xy + c * c * x2 * y2;
    if (den < S(kMinNorm)) den = S(kMinNorm);
    out.row(i) = (num_x * x.row(i) + num_y * y.row(i)) / den;
  }
  return project_to_ball(out, curvature);
}

/// Exponential map at the origin: tanh(sqrt(c)|v|) v / (sqrt(c)|v|).
template <typename Derived>
Points<typename Derived::Scalar> exp0(const Eigen::MatrixBase<Derived>& v, Curvature<typename Derived::Scalar> c) {
  using S = typename Derived::Scalar;
  detail::require_finite(v, "exp0");
  Points<S> out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i) {
    const S n = std::max(S(v.row(i).norm()), S(kMinNorm));
    out.row(i) = detail::tanh_ratio(c.sqrt() * n) * v.row(i);
  }
  return project_to_ball(out, c);
}

/// Logarithmic map at the origin: artanh(sqrt(c)|y|) y / (sqrt(c)|y|).
template <typename Derived>
Points<typename Derived::Scalar> log0(const Eigen::MatrixBase<Derived>& y, Curvature<typename Derived::Scalar> c) {
  using S = typename Derived::Scalar;
  detail::require_finite(y, "log0");
  Points<S> out(y.rows(), y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    const S n = std::max(S(y.row(i).norm()), S(kMinNorm));
    const S w = c.sqrt() * n;
    if (w >= S(1)) throw NumericError("log0: point outside the ball (sqrt(c)|y| = " + std::to_string(double(w)) + ")");
    const S wc = std::min(w, S(kArtanhLimit));
    using std::atanh;
    out.row(i) = (wc == w ? detail::artanh_ratio(w) : atanh(wc) / w) * y.row(i);
  }
  return out;
}

/// Geodesic distance (2/sqrt(c)) artanh(sqrt(c) |(-x) ⊕_c y|), one value per
/// row pair. |(-x) ⊕_c y| is evaluated through the closed form
/// |x - y| / sqrt(1 - 2c<x,y> + c^2 |x|^2 |y|^2), which is symmetric in x and y
/// term by term so d(x, y) == d(y, x) exactly.
template <typename A, typename B>
Eigen::Matrix<typename A::Scalar, Eigen::Dynamic, 1> distance(const Eigen::MatrixBase<A>& x,
                                                              const Eigen::MatrixBase<B>& y,
                                                              Curvature<typename A::Scalar> curvature) {
  using S = typename A::Scalar;
  using std::atanh;
  using std::sqrt;
  detail::require_same_shape(x, y, "distance");
  const S c = curvature.value();
  Eigen::Matrix<S, Eigen::Dynamic, 1> out(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const S diff2 = (x.row(i) - y.row(i)).squaredNorm();
    const S xy = x.row(i).dot(y.row(i));
    const S x2 = x.row(i).squaredNorm();
    const S y2 = y.row(i).squaredNorm();
    const S den = std::max(S(1) - S(2) * c * xy + c * c * (x2 * y2), S(kMinNorm));
    const S w = std::min(curvature.sqrt() * sqrt(diff2 / den), S(kArtanhLimit));
    out(i) = S(2) / curvature.sqrt() * atanh(w);
  }
  return out;
}

}  // namespace hyq
