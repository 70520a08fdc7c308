#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "psp/csr_matrix.hpp"
#include "psp/errors.hpp"
#include "psp/vector.hpp"

namespace psp {

/// Square banded matrix with half-bandwidth d, stored as 2d+1 contiguous
/// diagonals of length n. Diagonal `offset` (j - i, in [-d, d]) lives at
/// band(offset)[i]; positions that fall outside the matrix are kept at zero.
class BandedMatrix {
 public:
  BandedMatrix() = default;

  BandedMatrix(std::size_t n, std::size_t d) : n_(n), d_(d), bands_((2 * d + 1) * n, 0.0) {}

  static BandedMatrix identity(std::size_t n, std::size_t d = 1) {
    BandedMatrix m(n, d);
    for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
    return m;
  }

  /// Copies the in-band part of `a`. Entries outside the band are an error
  /// unless `drop_outside` is set.
  static BandedMatrix from_csr(const CsrMatrix& a, std::size_t d, bool drop_outside = false) {
    if (a.rows() != a.cols()) throw DimensionError("banded: matrix must be square");
    BandedMatrix m(a.rows(), d);
    for (const auto& t : a.to_triplets()) {
      if (in_band(t.row, t.col, d)) {
        m.set(t.row, t.col, t.value);
      } else if (!drop_outside && t.value != 0.0) {
        throw DimensionError("banded: entry (" + std::to_string(t.row) + ", " +
                             std::to_string(t.col) + ") outside half-bandwidth " +
                             std::to_string(d));
      }
    }
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t half_bandwidth() const noexcept { return d_; }

  static bool in_band(std::size_t i, std::size_t j, std::size_t d) noexcept {
    return (i > j ? i - j : j - i) <= d;
  }
  bool in_band(std::size_t i, std::size_t j) const noexcept { return in_band(i, j, d_); }

  /// Out-of-band reads return exactly zero.
  double operator()(std::size_t i, std::size_t j) const noexcept {
    if (!in_band(i, j)) return 0.0;
    return bands_[slot(i, j)];
  }

  void set(std::size_t i, std::size_t j, double v) {
    if (i >= n_ || j >= n_ || !in_band(i, j)) {
      throw DimensionError("banded: (" + std::to_string(i) + ", " + std::to_string(j) +
                           ") not addressable with half-bandwidth " + std::to_string(d_));
    }
    bands_[slot(i, j)] = v;
  }

  /// Diagonal with the given offset (j - i); length n, padded with zeros.
  std::span<const double> band(std::ptrdiff_t offset) const {
    const auto b = static_cast<std::size_t>(offset + static_cast<std::ptrdiff_t>(d_));
    return std::span<const double>(bands_).subspan(b * n_, n_);
  }

  void set_identity_row(std::size_t i) {
    const std::size_t lo = i >= d_ ? i - d_ : 0;
    const std::size_t hi = std::min(n_ - 1, i + d_);
    for (std::size_t j = lo; j <= hi; ++j) set(i, j, i == j ? 1.0 : 0.0);
  }

  /// out = N * x
  void apply(std::span<const double> x, std::span<double> out) const {
    detail::require_same_size(n_, x.size(), "banded_matvec");
    detail::require_same_size(n_, out.size(), "banded_matvec");
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t lo = i >= d_ ? i - d_ : 0;
      const std::size_t hi = std::min(n_ - 1, i + d_);
      double s = 0.0;
      for (std::size_t j = lo; j <= hi; ++j) s += bands_[slot(i, j)] * x[j];
      out[i] = s;
    }
  }

  CsrMatrix to_csr() const {
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < n_; ++i) {
      const std::size_t lo = i >= d_ ? i - d_ : 0;
      const std::size_t hi = std::min(n_ - 1, i + d_);
      for (std::size_t j = lo; j <= hi; ++j) {
        const double v = bands_[slot(i, j)];
        if (v != 0.0) t.push_back({i, j, v});
      }
    }
    return CsrMatrix::from_triplets(n_, n_, std::move(t));
  }

  friend bool operator==(const BandedMatrix&, const BandedMatrix&) = default;

 private:
  std::size_t slot(std::size_t i, std::size_t j) const noexcept {
    // band index = (j - i) + d
    return (j + d_ - i) * n_ + i;
  }

  std::size_t n_ = 0;
  std::size_t d_ = 0;
  std::vector<double> bands_;
};

inline Vector banded_matvec(const BandedMatrix& m, std::span<const double> x) {
  detail::require_same_size(m.size(), x.size(), "banded_matvec");
  Vector y(m.size());
  m.apply(x, y);
  return y;
}

}  // namespace psp
