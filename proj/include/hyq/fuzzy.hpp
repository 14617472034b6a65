#pragma once

#include <Eigen/Core>

#include "hyq/error.hpp"

namespace hyq {

/// Membership degrees over all entities, each in [0, 1].
template <typename Scalar>
using FuzzySet = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using FuzzySetd = FuzzySet<double>;

namespace detail {

template <typename A, typename B>
void require_same_length(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y, const char* op) {
  if (x.size() != y.size()) {
    throw DimensionError(std::string(op) + ": fuzzy sets of length " + std::to_string(x.size()) + " and " +
                         std::to_string(y.size()));
  }
}

}  // namespace detail

/// Clamp into [0, 1]; absorbs rounding such as 1 - x with x = 1 + eps.
template <typename Derived>
FuzzySet<typename Derived::Scalar> clamp_unit(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.array().max(S(0)).min(S(1)).matrix();
}

/// Product t-norm: x ⊙ y.
template <typename A, typename B>
FuzzySet<typename A::Scalar> conjunction(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  detail::require_same_length(x, y, "conjunction");
  return clamp_unit(x.cwiseProduct(y));
}

/// Probabilistic sum: x + y - x ⊙ y.
template <typename A, typename B>
FuzzySet<typename A::Scalar> disjunction(const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
  detail::require_same_length(x, y, "disjunction");
  return clamp_unit((x + y - x.cwiseProduct(y)).eval());
}

/// Complement against the universe: 1 - x.
template <typename Derived>
FuzzySet<typename Derived::Scalar> negation(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return clamp_unit((S(1) - x.array()).matrix().eval());
}

template <typename Derived>
bool is_fuzzy_set(const Eigen::MatrixBase<Derived>& x) {
  using S = typename Derived::Scalar;
  return x.allFinite() && (x.array() >= S(0)).all() && (x.array() <= S(1)).all();
}

}  // namespace hyq
