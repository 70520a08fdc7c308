#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "psp/banded_matrix.hpp"
#include "psp/errors.hpp"
#include "psp/probe_history.hpp"
#include "psp/vector.hpp"

namespace psp {

/// Design block for one interior row: a row of ones (intercept) stacked over
/// the 2d+1 probe rows P_x(i-d..i+d, :), plus the response P_y(i, :).
/// Stored row-major, `regressors() x samples()`.
class RegressionDesign {
 public:
  RegressionDesign(std::size_t regressors, std::size_t samples)
      : p_(regressors), m_(samples), rows_(regressors * samples, 0.0), response_(samples, 0.0) {}

  /// Gathers the design for row i (0-based) from a row-major copy of the
  /// probe history (see ProbeRows).
  static RegressionDesign for_row(std::span<const Vector> px_rows, std::span<const double> py_row,
                                  std::size_t i, std::size_t d) {
    const std::size_t m = py_row.size();
    RegressionDesign design(2 * (d + 1), m);
    std::fill_n(design.row(0).begin(), m, 1.0);
    for (std::size_t r = 0; r <= 2 * d; ++r) {
      const auto& src = px_rows[i - d + r];
      std::copy(src.begin(), src.end(), design.row(r + 1).begin());
    }
    std::copy(py_row.begin(), py_row.end(), design.response().begin());
    return design;
  }

  std::size_t regressors() const noexcept { return p_; }
  std::size_t samples() const noexcept { return m_; }

  std::span<double> row(std::size_t r) { return std::span<double>(rows_).subspan(r * m_, m_); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(rows_).subspan(r * m_, m_);
  }
  std::span<double> response() noexcept { return response_; }
  std::span<const double> response() const noexcept { return response_; }

  /// ||response - coeffs^T * rows||
  double residual_norm(std::span<const double> coeffs) const {
    double ss = 0.0;
    for (std::size_t c = 0; c < m_; ++c) {
      double fit = 0.0;
      for (std::size_t r = 0; r < p_; ++r) fit += coeffs[r] * rows_[r * m_ + c];
      const double e = response_[c] - fit;
      ss += e * e;
    }
    return std::sqrt(ss);
  }

 private:
  std::size_t p_;
  std::size_t m_;
  std::vector<double> rows_;
  Vector response_;
};

struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ordinary least squares of ys on xs.
inline LinearFit simple_linear_fit(std::span<const double> xs, std::span<const double> ys) {
  detail::require_same_size(xs.size(), ys.size(), "simple_linear_fit");
  const std::size_t m = xs.size();
  if (m < 2) throw InsufficientSamplesError("simple_linear_fit: need at least 2 samples");
  double mx = 0.0, my = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    mx += xs[c];
    my += ys[c];
  }
  mx /= static_cast<double>(m);
  my /= static_cast<double>(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t c = 0; c < m; ++c) {
    sxx += (xs[c] - mx) * (xs[c] - mx);
    sxy += (xs[c] - mx) * (ys[c] - my);
  }
  if (!(sxx / static_cast<double>(m) >= 1e-300)) {
    throw ZeroVarianceError("simple_linear_fit: regressor has zero variance");
  }
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

struct RegressionFit {
  /// N*: intercept first, then one coefficient per probe row i-d..i+d.
  Vector coeffs;
  bool ridge_used = false;
  double ridge = 0.0;
  double residual_norm = 0.0;
};

inline constexpr double kMaxNormalCondition = 1e12;
inline constexpr double kRidgeScale = 1e-10;

namespace detail {

/// In-place Cholesky of a dense symmetric p x p matrix (row-major). Returns
/// false on a non-positive pivot.
inline bool cholesky(std::vector<double>& a, std::size_t p) {
  for (std::size_t j = 0; j < p; ++j) {
    double diag = a[j * p + j];
    for (std::size_t k = 0; k < j; ++k) diag -= a[j * p + k] * a[j * p + k];
    if (!(diag > 0.0) || !std::isfinite(diag)) return false;
    const double ljj = std::sqrt(diag);
    a[j * p + j] = ljj;
    for (std::size_t i = j + 1; i < p; ++i) {
      double s = a[i * p + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * p + k] * a[j * p + k];
      a[i * p + j] = s / ljj;
    }
  }
  return true;
}

/// Squared ratio of the extreme Cholesky pivots; a cheap lower estimate of
/// the 2-norm condition number of the factored matrix.
inline double cholesky_condition_estimate(const std::vector<double>& l, std::size_t p) {
  double lo = l[0], hi = l[0];
  for (std::size_t j = 1; j < p; ++j) {
    lo = std::min(lo, l[j * p + j]);
    hi = std::max(hi, l[j * p + j]);
  }
  const double r = hi / lo;
  return r * r;
}

inline Vector cholesky_solve(const std::vector<double>& l, std::size_t p, Vector rhs) {
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t k = 0; k < i; ++k) rhs[i] -= l[i * p + k] * rhs[k];
    rhs[i] /= l[i * p + i];
  }
  for (std::size_t i = p; i-- > 0;) {
    for (std::size_t k = i + 1; k < p; ++k) rhs[i] -= l[k * p + i] * rhs[k];
    rhs[i] /= l[i * p + i];
  }
  return rhs;
}

}  // namespace detail

/// Solves the normal equations (X X^T + ridge I) N* = X y^T by Cholesky.
/// With ridge == 0 an unregularized solve is tried first; if the factorization
/// fails or its condition estimate exceeds 1e12, it is retried with
/// ridge = 1e-10 * trace(X X^T) / p.
inline RegressionFit multi_regress(const RegressionDesign& design, double ridge = 0.0) {
  if (ridge < 0.0) throw ConfigError("multi_regress: ridge must be >= 0");
  const std::size_t p = design.regressors();
  const std::size_t m = design.samples();
  if (ridge == 0.0 && m < p) {
    throw InsufficientSamplesError("multi_regress: " + std::to_string(m) + " samples for " +
                                   std::to_string(p) + " unknowns");
  }

  std::vector<double> normal(p * p, 0.0);
  Vector rhs(p, 0.0);
  for (std::size_t r = 0; r < p; ++r) {
    const auto xr = design.row(r);
    for (std::size_t s = 0; s <= r; ++s) {
      const double v = dot(xr, design.row(s));
      normal[r * p + s] = v;
      normal[s * p + r] = v;
    }
    rhs[r] = dot(xr, design.response());
  }

  auto attempt = [&](double lambda, bool check_condition) -> std::optional<Vector> {
    auto l = normal;
    for (std::size_t j = 0; j < p; ++j) l[j * p + j] += lambda;
    if (!detail::cholesky(l, p)) return std::nullopt;
    if (check_condition && detail::cholesky_condition_estimate(l, p) > kMaxNormalCondition) {
      return std::nullopt;
    }
    auto coeffs = detail::cholesky_solve(l, p, rhs);
    if (!all_finite(coeffs)) return std::nullopt;
    return coeffs;
  };

  RegressionFit fit;
  if (ridge == 0.0) {
    if (auto c = attempt(0.0, true)) {
      fit.coeffs = std::move(*c);
    } else {
      double trace = 0.0;
      for (std::size_t j = 0; j < p; ++j) trace += normal[j * p + j];
      fit.ridge = kRidgeScale * trace / static_cast<double>(p);
      fit.ridge_used = true;
    }
  } else {
    fit.ridge = ridge;
    fit.ridge_used = true;
  }
  if (fit.ridge_used) {
    auto c = fit.ridge > 0.0 ? attempt(fit.ridge, false) : std::nullopt;
    if (!c) throw RankDeficiencyError("multi_regress: normal equations singular even with ridge");
    fit.coeffs = std::move(*c);
  }
  fit.residual_norm = design.residual_norm(fit.coeffs);
  return fit;
}

enum class RowFitKind { BoundarySimple, InteriorMulti, FallbackIdentity };

inline const char* to_string(RowFitKind k) {
  switch (k) {
    case RowFitKind::BoundarySimple: return "boundary-simple";
    case RowFitKind::InteriorMulti: return "interior-multi";
    case RowFitKind::FallbackIdentity: return "fallback-identity";
  }
  return "?";
}

struct RowDiagnostics {
  RowFitKind kind = RowFitKind::InteriorMulti;
  bool ridge_used = false;
  double residual_norm = 0.0;
};

struct PreconditionerEstimate {
  BandedMatrix n;
  std::vector<RowDiagnostics> rows;
  /// Fitted intercepts per row (beta_0 / N*(1)); never installed into n.
  Vector intercepts;

  std::size_t fallback_rows() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) {
      return r.kind == RowFitKind::FallbackIdentity;
    }));
  }
};

/// Diagonal entries below this fraction of the largest one are replaced by an
/// identity row.
inline constexpr double kDiagonalFloor = 1e-12;

/// Rows whose diagonal is zero, non-finite or negligibly small relative to
/// the largest diagonal entry become identity rows. Returns the rows touched.
inline std::vector<std::size_t> repair_diagonal(BandedMatrix& n_matrix) {
  double biggest = 0.0;
  for (std::size_t i = 0; i < n_matrix.size(); ++i) {
    const double v = n_matrix(i, i);
    if (std::isfinite(v)) biggest = std::max(biggest, std::abs(v));
  }
  std::vector<std::size_t> touched;
  for (std::size_t i = 0; i < n_matrix.size(); ++i) {
    bool bad = false;
    const std::size_t lo = i >= n_matrix.half_bandwidth() ? i - n_matrix.half_bandwidth() : 0;
    const std::size_t hi = std::min(n_matrix.size() - 1, i + n_matrix.half_bandwidth());
    for (std::size_t j = lo; j <= hi; ++j) bad = bad || !std::isfinite(n_matrix(i, j));
    const double diag = n_matrix(i, i);
    if (bad || !(std::abs(diag) >= kDiagonalFloor * biggest) || diag == 0.0) {
      n_matrix.set_identity_row(i);
      touched.push_back(i);
    }
  }
  return touched;
}

/// Row-major copy of the probe history: px[i][c] = P_x(i, c).
struct ProbeRows {
  std::vector<Vector> px;
  std::vector<Vector> py;

  explicit ProbeRows(const ProbeHistory& h)
      : px(h.dimension(), Vector(h.size())), py(h.dimension(), Vector(h.size())) {
    std::size_t c = 0;
    for (const auto& pair : h) {
      for (std::size_t i = 0; i < h.dimension(); ++i) {
        px[i][c] = pair.x[i];
        py[i][c] = pair.y[i];
      }
      ++c;
    }
  }
};

/// Multi-regressor estimate of a banded N with P_y ~ N P_x. The first and
/// last d rows get only a diagonal from a simple linear fit; interior rows
/// regress P_y(i,:) on an intercept plus P_x(i-d..i+d,:), and coefficient
/// r (1-based after the intercept) lands in column i-d+r-1.
inline PreconditionerEstimate mrep(const ProbeHistory& history, std::size_t d) {
  const std::size_t n = history.dimension();
  const std::size_t m = history.size();
  if (d < 1) throw ConfigError("mrep: half-bandwidth must be >= 1");
  if (n < 2 * d + 1) throw ConfigError("mrep: dimension too small for half-bandwidth");
  if (m < 2 * (d + 1)) {
    throw InsufficientSamplesError("mrep: " + std::to_string(m) + " probes, need at least " +
                                   std::to_string(2 * (d + 1)));
  }

  const ProbeRows probes(history);
  PreconditionerEstimate est{BandedMatrix(n, d), std::vector<RowDiagnostics>(n), Vector(n, 0.0)};

  auto fit_boundary = [&](std::size_t i) {
    auto& diag = est.rows[i];
    try {
      const auto f = simple_linear_fit(probes.px[i], probes.py[i]);
      est.n.set(i, i, f.slope);
      est.intercepts[i] = f.intercept;
      diag.kind = RowFitKind::BoundarySimple;
      double ss = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        const double e = probes.py[i][c] - f.intercept - f.slope * probes.px[i][c];
        ss += e * e;
      }
      diag.residual_norm = std::sqrt(ss);
    } catch (const ZeroVarianceError&) {
      est.n.set_identity_row(i);
      diag.kind = RowFitKind::FallbackIdentity;
    }
  };

  for (std::size_t i = 0; i < d; ++i) fit_boundary(i);
  for (std::size_t i = d; i < n - d; ++i) {
    auto& diag = est.rows[i];
    const auto design = RegressionDesign::for_row(probes.px, probes.py[i], i, d);
    try {
      const auto f = multi_regress(design);
      est.intercepts[i] = f.coeffs[0];
      for (std::size_t r = 1; r < f.coeffs.size(); ++r) est.n.set(i, i - d + r - 1, f.coeffs[r]);
      diag.kind = RowFitKind::InteriorMulti;
      diag.ridge_used = f.ridge_used;
      diag.residual_norm = f.residual_norm;
    } catch (const RankDeficiencyError&) {
      est.n.set_identity_row(i);
      diag.kind = RowFitKind::FallbackIdentity;
      diag.ridge_used = true;
    }
  }
  for (std::size_t i = n - d; i < n; ++i) fit_boundary(i);

  for (std::size_t i : repair_diagonal(est.n)) est.rows[i].kind = RowFitKind::FallbackIdentity;
  return est;
}

}  // namespace psp
