#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "psp/errors.hpp"

namespace psp {

/// Dense vector of doubles. Length is fixed by whoever constructs it; the
/// free functions below never resize their inputs.
using Vector = std::vector<double>;

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* where) {
  if (a != b) {
    throw DimensionError(std::string(where) + ": size mismatch " + std::to_string(a) +
                         " vs " + std::to_string(b));
  }
}

}  // namespace detail

inline double dot(std::span<const double> x, std::span<const double> y) {
  detail::require_same_size(x.size(), y.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

inline double norm2(std::span<const double> x) {
  return std::sqrt(dot(x, x));
}

/// Returns a*x + y.
inline Vector axpy(double a, std::span<const double> x, std::span<const double> y) {
  detail::require_same_size(x.size(), y.size(), "axpy");
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += a * x[i];
  return out;
}

/// y <- a*x + y
inline void axpy_inplace(double a, std::span<const double> x, std::span<double> y) {
  detail::require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

inline void scale_inplace(double a, std::span<double> x) {
  for (double& v : x) v *= a;
}

inline bool all_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

}  // namespace psp
