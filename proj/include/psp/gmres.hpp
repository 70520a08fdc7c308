#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psp/banded_solve.hpp"
#include "psp/errors.hpp"
#include "psp/linear_operator.hpp"
#include "psp/probe_history.hpp"
#include "psp/vector.hpp"

namespace psp {

struct GmresConfig {
  /// Residual-norm tolerance; absolute unless `relative` is set, in which
  /// case the threshold is epsilon * ||b||.
  double epsilon = 1e-8;
  /// Krylov vectors per restart cycle (n_A).
  std::size_t max_inner = 30;
  /// Maximum number of restart cycles (n_r).
  std::size_t max_restarts = 50;
  bool relative = false;
  /// Second modified Gram-Schmidt pass in every Arnoldi step.
  bool reorthogonalize = false;
  /// Store the iterate x_k after every inner iteration (costs one extra
  /// back-substitution and preconditioner solve per iteration).
  bool record_iterates = false;

  void validate() const {
    if (!(epsilon > 0.0)) throw ConfigError("gmres: epsilon must be > 0");
    if (max_inner < 1) throw ConfigError("gmres: max_inner must be >= 1");
    if (max_restarts < 1) throw ConfigError("gmres: max_restarts must be >= 1");
  }
};

struct SolveReport {
  bool converged = false;
  std::size_t iterations_total = 0;
  /// Arnoldi cycles started.
  std::size_t cycles = 0;
  /// Cycles after the first one.
  std::size_t restarts_used = 0;
  /// |G(k+1)| after every inner iteration, across all cycles.
  std::vector<double> residual_history;
  std::size_t matvec_count = 0;
  std::size_t precond_apply_count = 0;
  double initial_residual = 0.0;
  /// Explicitly recomputed ||b - A x|| for the returned x.
  double final_residual = 0.0;
  /// Absolute threshold the solve was tested against.
  double tolerance = 0.0;
  bool lucky_breakdown = false;
  std::vector<Vector> iterates;
};

/// A non-finite value showed up during the solve. Carries the report as it
/// stood at that point.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, SolveReport partial)
      : Error(what), report_(std::move(partial)) {}
  const SolveReport& report() const noexcept { return report_; }

 private:
  SolveReport report_;
};

struct GmresResult {
  Vector x;
  SolveReport report;
};

/// Storage for one restart cycle: the Krylov basis V (max_inner+1 columns),
/// the (max_inner+1) x max_inner Hessenberg matrix H (column-major), the
/// rotated right-hand side G and the Givens coefficients C, S.
class GmresWorkspace {
 public:
  GmresWorkspace(std::size_t n, std::size_t max_inner)
      : n_(n),
        max_inner_(max_inner),
        basis_(max_inner + 1, Vector(n, 0.0)),
        hessenberg_((max_inner + 1) * max_inner, 0.0),
        g_(max_inner + 1, 0.0),
        cosines_(max_inner, 0.0),
        sines_(max_inner, 0.0),
        scratch_(n, 0.0) {}

  std::size_t dimension() const noexcept { return n_; }
  std::size_t max_inner() const noexcept { return max_inner_; }

  double& h(std::size_t i, std::size_t k) { return hessenberg_[k * (max_inner_ + 1) + i]; }
  double h(std::size_t i, std::size_t k) const { return hessenberg_[k * (max_inner_ + 1) + i]; }

  Vector& v(std::size_t j) { return basis_[j]; }
  const Vector& v(std::size_t j) const { return basis_[j]; }

  std::span<double> g() noexcept { return g_; }
  std::span<const double> g() const noexcept { return g_; }
  std::span<double> cosines() noexcept { return cosines_; }
  std::span<const double> cosines() const noexcept { return cosines_; }
  std::span<double> sines() noexcept { return sines_; }
  std::span<const double> sines() const noexcept { return sines_; }
  Vector& scratch() noexcept { return scratch_; }

  bool finished = false;

  /// Resets G, V, H, C, S between restart cycles.
  void clean() {
    for (auto& col : basis_) std::fill(col.begin(), col.end(), 0.0);
    std::fill(hessenberg_.begin(), hessenberg_.end(), 0.0);
    std::fill(g_.begin(), g_.end(), 0.0);
    std::fill(cosines_.begin(), cosines_.end(), 0.0);
    std::fill(sines_.begin(), sines_.end(), 0.0);
    finished = false;
  }

 private:
  std::size_t n_;
  std::size_t max_inner_;
  std::vector<Vector> basis_;
  std::vector<double> hessenberg_;
  Vector g_;
  Vector cosines_;
  Vector sines_;
  Vector scratch_;
};

/// Subdiagonal entries below this fraction of their column norm count as
/// an invariant Krylov space.
inline constexpr double kBreakdownRatio = 1e-14;

struct ArnoldiOutcome {
  bool breakdown = false;
};

/// One Arnoldi step on column k (0-based): Y = N^{-1} V(:,k), U = A Y with
/// (Y, U) recorded as a probe, modified Gram-Schmidt against V(:,0..k),
/// then V(:,k+1) = U / H(k+1,k). On breakdown V(:,k+1) is left at zero.
template <LinearOperator Op>
ArnoldiOutcome arnoldi_step(const Op& a, const Preconditioner& precond, GmresWorkspace& ws,
                            std::size_t k, ProbeHistory& history, SolveReport& report,
                            bool reorthogonalize = false) {
  Vector y;
  if (precond.is_identity()) {
    y = ws.v(k);
  } else {
    y = precond.solve(ws.v(k));
    ++report.precond_apply_count;
  }
  Vector& u = ws.scratch();
  a.apply(y, u);
  ++report.matvec_count;
  history.record(y, u);
  if (!all_finite(u)) throw DivergenceError("gmres: non-finite operator output", report);

  for (std::size_t j = 0; j <= k; ++j) {
    const double hjk = dot(ws.v(j), u);
    ws.h(j, k) = hjk;
    axpy_inplace(-hjk, ws.v(j), u);
  }
  if (reorthogonalize) {
    for (std::size_t j = 0; j <= k; ++j) {
      const double corr = dot(ws.v(j), u);
      ws.h(j, k) += corr;
      axpy_inplace(-corr, ws.v(j), u);
    }
  }

  const double sub = norm2(u);
  ws.h(k + 1, k) = sub;
  double column = sub * sub;
  for (std::size_t j = 0; j <= k; ++j) column += ws.h(j, k) * ws.h(j, k);
  column = std::sqrt(column);

  ArnoldiOutcome out;
  if (!(sub > kBreakdownRatio * column)) {
    out.breakdown = true;
    ws.h(k + 1, k) = 0.0;
    std::fill(ws.v(k + 1).begin(), ws.v(k + 1).end(), 0.0);
    return out;
  }
  Vector& next = ws.v(k + 1);
  for (std::size_t i = 0; i < u.size(); ++i) next[i] = u[i] / sub;
  return out;
}

struct GivensOutcome {
  /// R(k) = |G(k+1)|
  double residual = 0.0;
  /// gamma was zero: the column carries no information.
  bool degenerate = false;
};

/// Applies the stored rotations 0..k-1 to column k of H, computes and applies
/// rotation k, and updates G. Expects G(k+1) == 0 on entry.
inline GivensOutcome givens_update(GmresWorkspace& ws, std::size_t k) {
  auto c = ws.cosines();
  auto s = ws.sines();
  auto g = ws.g();
  for (std::size_t j = 0; j < k; ++j) {
    const double delta = ws.h(j, k);
    ws.h(j, k) = delta * c[j] + s[j] * ws.h(j + 1, k);
    ws.h(j + 1, k) = -delta * s[j] + c[j] * ws.h(j + 1, k);
  }
  const double gamma = std::hypot(ws.h(k, k), ws.h(k + 1, k));
  if (gamma == 0.0) return {std::abs(g[k]), true};

  c[k] = ws.h(k, k) / gamma;
  s[k] = ws.h(k + 1, k) / gamma;
  ws.h(k, k) = gamma;
  ws.h(k + 1, k) = 0.0;
  const double delta = g[k];
  g[k] = c[k] * delta + s[k] * g[k + 1];
  g[k + 1] = -s[k] * delta + c[k] * g[k + 1];
  return {std::abs(g[k + 1]), false};
}

/// Solves the leading k x k triangle H Q = G by back-substitution, forms
/// Z = sum_j Q(j) V(:,j) and returns x0 + N^{-1} Z.
inline Vector form_solution(const GmresWorkspace& ws, std::span<const double> x0,
                            const Preconditioner& precond, std::size_t k) {
  detail::require_same_size(ws.dimension(), x0.size(), "form_solution");
  Vector q(k, 0.0);
  for (std::size_t i = k; i-- > 0;) {
    double s = ws.g()[i];
    for (std::size_t j = i + 1; j < k; ++j) s -= ws.h(i, j) * q[j];
    const double pivot = ws.h(i, i);
    if (!(std::abs(pivot) >= kPivotFloor)) {
      throw SingularProjectionError("form_solution: zero pivot at row " + std::to_string(i));
    }
    q[i] = s / pivot;
  }
  Vector z(ws.dimension(), 0.0);
  for (std::size_t j = 0; j < k; ++j) axpy_inplace(q[j], ws.v(j), z);
  Vector x(x0.begin(), x0.end());
  if (precond.is_identity()) {
    axpy_inplace(1.0, z, x);
  } else {
    axpy_inplace(1.0, precond.solve(z), x);
  }
  return x;
}

/// Restarted right-preconditioned GMRES that records every operator
/// application into `history`. Each cycle starts by probing (x0, A x0); that
/// same probe is the explicit residual check for the previous cycle, so the
/// reported final residual is always a recomputed ||b - A x||.
template <LinearOperator Op>
GmresResult psp_gmres(const Op& a, std::span<const double> b, std::span<const double> x0,
                      const Preconditioner& precond, const GmresConfig& cfg,
                      ProbeHistory& history) {
  cfg.validate();
  const std::size_t n = a.size();
  detail::require_same_size(n, b.size(), "psp_gmres b");
  detail::require_same_size(n, x0.size(), "psp_gmres x0");
  detail::require_same_size(n, precond.size(), "psp_gmres preconditioner");
  detail::require_same_size(n, history.dimension(), "psp_gmres history");

  GmresResult result{Vector(x0.begin(), x0.end()), {}};
  SolveReport& report = result.report;
  report.tolerance = cfg.relative ? cfg.epsilon * norm2(b) : cfg.epsilon;

  GmresWorkspace ws(n, cfg.max_inner);
  Vector ax(n);
  bool stalled = false;
  for (std::size_t cycle = 0;; ++cycle) {
    Vector& x = result.x;
    a.apply(x, ax);
    ++report.matvec_count;
    history.record(x, ax);
    Vector r(b.begin(), b.end());
    axpy_inplace(-1.0, ax, r);
    const double beta = norm2(r);
    if (!std::isfinite(beta)) throw DivergenceError("gmres: non-finite residual", report);
    if (cycle == 0) report.initial_residual = beta;
    report.final_residual = beta;
    if (beta <= report.tolerance) {
      report.converged = true;
      break;
    }
    if (cycle == cfg.max_restarts || stalled) break;

    ++report.cycles;
    for (std::size_t i = 0; i < n; ++i) ws.v(0)[i] = r[i] / beta;
    ws.g()[0] = beta;

    std::size_t used = 0;
    for (std::size_t k = 0; k < cfg.max_inner; ++k) {
      ws.g()[k + 1] = 0.0;
      const auto arnoldi = arnoldi_step(a, precond, ws, k, history, report, cfg.reorthogonalize);
      const auto rot = givens_update(ws, k);
      if (rot.degenerate) {
        stalled = true;
        break;
      }
      used = k + 1;
      ++report.iterations_total;
      report.residual_history.push_back(rot.residual);
      if (!std::isfinite(rot.residual)) {
        throw DivergenceError("gmres: non-finite residual estimate", report);
      }
      if (cfg.record_iterates) report.iterates.push_back(form_solution(ws, x, precond, used));
      if (rot.residual <= report.tolerance) {
        ws.finished = true;
        break;
      }
      if (arnoldi.breakdown) {
        report.lucky_breakdown = true;
        break;
      }
    }
    if (used > 0) {
      x = form_solution(ws, x, precond, used);
      if (!precond.is_identity()) ++report.precond_apply_count;
      if (!all_finite(x)) throw DivergenceError("gmres: non-finite iterate", report);
    }
    ws.clean();
  }
  report.restarts_used = report.cycles > 0 ? report.cycles - 1 : 0;
  return result;
}

template <LinearOperator Op>
GmresResult psp_gmres(const Op& a, std::span<const double> b, std::span<const double> x0,
                      const BandedMatrix& n_matrix, const GmresConfig& cfg,
                      ProbeHistory& history) {
  return psp_gmres(a, b, x0, Preconditioner(n_matrix), cfg, history);
}

/// Plain GMRES (identity preconditioner), still recording probes.
template <LinearOperator Op>
GmresResult psp_gmres(const Op& a, std::span<const double> b, std::span<const double> x0,
                      const GmresConfig& cfg, ProbeHistory& history) {
  return psp_gmres(a, b, x0, Preconditioner::identity(a.size()), cfg, history);
}

}  // namespace psp
