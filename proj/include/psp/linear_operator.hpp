#pragma once

#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>

#include "psp/vector.hpp"

namespace psp {

/// Anything that can compute y = A x for a square A without exposing A's
/// entries. CsrMatrix, BandedMatrix and the matrix-free problem operators
/// all model this.
template <typename Op>
concept LinearOperator = requires(const Op& op, std::span<const double> x, std::span<double> y) {
  { op.size() } -> std::convertible_to<std::size_t>;
  op.apply(x, y);
};

template <LinearOperator Op>
Vector apply(const Op& op, std::span<const double> x) {
  detail::require_same_size(op.size(), x.size(), "apply");
  Vector y(op.size());
  op.apply(x, y);
  return y;
}

/// Type-erased operator around a callable `void(span<const double>, span<double>)`.
class FunctionOperator {
 public:
  using Fn = std::function<void(std::span<const double>, std::span<double>)>;

  FunctionOperator(std::size_t n, Fn fn) : n_(n), fn_(std::move(fn)) {}

  std::size_t size() const noexcept { return n_; }

  void apply(std::span<const double> x, std::span<double> y) const {
    detail::require_same_size(n_, x.size(), "operator apply");
    detail::require_same_size(n_, y.size(), "operator apply");
    fn_(x, y);
  }

 private:
  std::size_t n_;
  Fn fn_;
};

/// Wraps an operator and counts applications.
template <LinearOperator Op>
class CountingOperator {
 public:
  explicit CountingOperator(const Op& op) : op_(&op) {}

  std::size_t size() const noexcept { return op_->size(); }
  void apply(std::span<const double> x, std::span<double> y) const {
    ++count_;
    op_->apply(x, y);
  }
  std::size_t count() const noexcept { return count_; }

 private:
  const Op* op_;
  mutable std::size_t count_ = 0;
};

}  // namespace psp
