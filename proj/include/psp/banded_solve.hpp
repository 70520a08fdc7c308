#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>

#include "psp/banded_matrix.hpp"
#include "psp/errors.hpp"
#include "psp/vector.hpp"

namespace psp {

/// Elementary floating-point operation tally for the direct solvers.
struct OpCounter {
  std::size_t flops = 0;
};

inline constexpr double kPivotFloor = 1e-300;
inline constexpr double kGrowthLimit = 1e100;

namespace detail {

inline void check_pivot(double pivot, std::size_t row) {
  if (!(std::abs(pivot) >= kPivotFloor)) throw SingularMatrixError("zero pivot", row);
}

inline void check_growth(double v, std::size_t row) {
  if (!(std::abs(v) <= kGrowthLimit)) throw SingularMatrixError("pivot growth", row);
}

}  // namespace detail

/// Thomas algorithm for a tridiagonal N (half-bandwidth 1), no pivoting.
/// O(n); the optional counter receives the number of flops performed.
inline Vector thomas_solve(const BandedMatrix& m, std::span<const double> rhs,
                           OpCounter* counter = nullptr) {
  if (m.half_bandwidth() != 1) throw DimensionError("thomas_solve: matrix must be tridiagonal");
  detail::require_same_size(m.size(), rhs.size(), "thomas_solve");
  const std::size_t n = m.size();
  Vector x(n);
  if (n == 0) return x;

  const auto lower = m.band(-1);  // lower[i] = N(i, i-1)
  const auto diag = m.band(0);
  const auto upper = m.band(1);  // upper[i] = N(i, i+1)

  Vector c(n);
  std::size_t flops = 0;
  detail::check_pivot(diag[0], 0);
  c[0] = upper[0] / diag[0];
  x[0] = rhs[0] / diag[0];
  flops += 2;
  for (std::size_t i = 1; i < n; ++i) {
    const double pivot = diag[i] - lower[i] * c[i - 1];
    detail::check_pivot(pivot, i);
    c[i] = upper[i] / pivot;
    x[i] = (rhs[i] - lower[i] * x[i - 1]) / pivot;
    detail::check_growth(c[i], i);
    detail::check_growth(x[i], i);
    flops += 6;
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    x[i] -= c[i] * x[i + 1];
    flops += 2;
  }
  if (counter) counter->flops += flops;
  return x;
}

/// In-band LU factors of a banded matrix (unit lower L below the diagonal,
/// U on and above it), computed without pivoting. Immutable once built.
class BandedFactorization {
 public:
  explicit BandedFactorization(const BandedMatrix& m) : lu_(m) { factor(); }

  std::size_t size() const noexcept { return lu_.size(); }
  std::size_t half_bandwidth() const noexcept { return lu_.half_bandwidth(); }
  const BandedMatrix& factors() const noexcept { return lu_; }

  Vector solve(std::span<const double> rhs, OpCounter* counter = nullptr) const {
    detail::require_same_size(size(), rhs.size(), "banded_lu_solve");
    const std::size_t n = size();
    const std::size_t d = half_bandwidth();
    Vector x(rhs.begin(), rhs.end());
    std::size_t flops = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t lo = i >= d ? i - d : 0;
      for (std::size_t j = lo; j < i; ++j) x[i] -= lu_(i, j) * x[j];
      flops += 2 * (i - lo);
    }
    for (std::size_t i = n; i-- > 0;) {
      const std::size_t hi = std::min(n - 1, i + d);
      for (std::size_t j = i + 1; j <= hi; ++j) x[i] -= lu_(i, j) * x[j];
      x[i] /= lu_(i, i);
      flops += 2 * (hi - i) + 1;
    }
    if (counter) counter->flops += flops;
    return x;
  }

 private:
  void factor() {
    const std::size_t n = lu_.size();
    const std::size_t d = lu_.half_bandwidth();
    for (std::size_t k = 0; k < n; ++k) {
      const double pivot = lu_(k, k);
      detail::check_pivot(pivot, k);
      const std::size_t hi = std::min(n - 1, k + d);
      for (std::size_t i = k + 1; i <= hi; ++i) {
        const double l = lu_(i, k) / pivot;
        lu_.set(i, k, l);
        for (std::size_t j = k + 1; j <= hi; ++j) {
          const double v = lu_(i, j) - l * lu_(k, j);
          detail::check_growth(v, i);
          lu_.set(i, j, v);
        }
      }
    }
  }

  BandedMatrix lu_;
};

inline BandedFactorization banded_lu_factor(const BandedMatrix& m) { return BandedFactorization(m); }

inline Vector banded_lu_solve(const BandedFactorization& f, std::span<const double> rhs) {
  return f.solve(rhs);
}

/// Applies N^{-1} for GMRES. Either the identity (no work at all) or a
/// banded N, solved with the Thomas algorithm when tridiagonal and with the
/// banded LU otherwise. Construction factors N once and throws
/// PreconditionerError if that fails.
class Preconditioner {
 public:
  static Preconditioner identity(std::size_t n) { return Preconditioner(n); }

  explicit Preconditioner(const BandedMatrix& m) : n_(m.size()) {
    try {
      lu_.emplace(m);
    } catch (const SingularMatrixError& e) {
      throw PreconditionerError(std::string("preconditioner factorization failed: ") + e.what());
    }
    source_ = m;
  }

  std::size_t size() const noexcept { return n_; }
  bool is_identity() const noexcept { return !lu_.has_value(); }
  /// The banded N, or nullptr for the identity.
  const BandedMatrix* matrix() const noexcept { return source_ ? &*source_ : nullptr; }

  /// Returns N^{-1} v.
  Vector solve(std::span<const double> v) const {
    detail::require_same_size(n_, v.size(), "preconditioner");
    if (!lu_) return Vector(v.begin(), v.end());
    if (source_->half_bandwidth() == 1) return thomas_solve(*source_, v);
    return lu_->solve(v);
  }

 private:
  explicit Preconditioner(std::size_t n) : n_(n) {}

  std::size_t n_;
  std::optional<BandedFactorization> lu_;
  std::optional<BandedMatrix> source_;
};

}  // namespace psp
