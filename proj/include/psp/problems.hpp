#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "psp/banded_matrix.hpp"
#include "psp/banded_solve.hpp"
#include "psp/csr_matrix.hpp"
#include "psp/errors.hpp"
#include "psp/gmres.hpp"
#include "psp/linear_operator.hpp"
#include "psp/mrep.hpp"
#include "psp/probe_history.hpp"
#include "psp/vector.hpp"

namespace psp {

// ---------------------------------------------------------------------------
// Random seven-diagonal family

struct GeneratorConfig {
  std::size_t n = 20;
  std::uint64_t seed = 1;
  std::vector<int> offsets{-3, -2, -1, 0, 1, 2, 3};
  /// a_ii = sum_{j != i} |a_ij| + dominance_margin
  double dominance_margin = 1.0;
};

struct GeneratedSystem {
  CsrMatrix a;
  Vector b;
};

/// Uniform double in [0, 1) from the top 53 bits; unlike
/// std::uniform_real_distribution this is identical on every standard library.
inline double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Off-diagonals uniform in [-1, 1], drawn row by row in offset order; the
/// diagonal makes every row strictly dominant by `dominance_margin`.
/// b = [1, 2, ..., n].
inline GeneratedSystem gen_seven_diagonal(const GeneratorConfig& cfg) {
  if (cfg.n < 7) throw ConfigError("generator: n must be >= 7");
  if (!(cfg.dominance_margin > 0.0)) throw ConfigError("generator: dominance_margin must be > 0");
  std::mt19937_64 rng(cfg.seed);
  const auto n = static_cast<std::ptrdiff_t>(cfg.n);
  std::vector<Triplet> entries;
  entries.reserve(cfg.n * cfg.offsets.size());
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    double off_sum = 0.0;
    for (int off : cfg.offsets) {
      if (off == 0) continue;
      const std::ptrdiff_t j = i + off;
      if (j < 0 || j >= n) continue;
      const double v = 2.0 * unit_uniform(rng) - 1.0;
      off_sum += std::abs(v);
      entries.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), v});
    }
    entries.push_back(
        {static_cast<std::size_t>(i), static_cast<std::size_t>(i), off_sum + cfg.dominance_margin});
  }
  GeneratedSystem sys{CsrMatrix::from_triplets(cfg.n, cfg.n, std::move(entries)), Vector(cfg.n)};
  for (std::size_t i = 0; i < cfg.n; ++i) sys.b[i] = static_cast<double>(i + 1);
  return sys;
}

// ---------------------------------------------------------------------------
// Finite-difference operators for du/dt = sum_k sum_i alpha_ki d^k u / dx_i^k

struct StencilSpec {
  /// (derivative order k, axis i) -> alpha_ki
  std::map<std::pair<int, int>, double> coefficients;
  std::vector<std::size_t> grid_points;
  std::vector<double> spacing;

  void validate() const {
    if (grid_points.size() != spacing.size() || grid_points.empty()) {
      throw ConfigError("stencil: grid_points and spacing must be non-empty and match");
    }
    if (grid_points.size() != 1) throw ConfigError("stencil: only one axis is supported");
    if (grid_points[0] < 3) throw ConfigError("stencil: need at least 3 grid points");
    if (!(spacing[0] > 0.0)) throw ConfigError("stencil: grid spacing must be > 0");
    for (const auto& [key, alpha] : coefficients) {
      if (key.first != 1 && key.first != 2) {
        throw ConfigError("stencil: derivative order " + std::to_string(key.first) +
                          " not supported");
      }
      if (key.second != 0) throw ConfigError("stencil: axis out of range");
      if (!std::isfinite(alpha)) throw ConfigError("stencil: non-finite coefficient");
    }
  }
};

/// Matrix-free A = I - dt*L for a 1-D central-difference L with Dirichlet
/// boundaries (boundary rows of A are identity rows).
class StencilOperator1d {
 public:
  StencilOperator1d(const StencilSpec& spec, double dt) : dt_(dt) {
    spec.validate();
    if (!(dt >= 0.0)) throw ConfigError("stencil: dt must be >= 0");
    n_ = spec.grid_points[0];
    const double dx = spec.spacing[0];
    double first = 0.0, second = 0.0;
    for (const auto& [key, alpha] : spec.coefficients) {
      (key.first == 1 ? first : second) += alpha;
    }
    // L v_i = lower*v_{i-1} + center*v_i + upper*v_{i+1}
    lower_ = second / (dx * dx) - first / (2.0 * dx);
    center_ = -2.0 * second / (dx * dx);
    upper_ = second / (dx * dx) + first / (2.0 * dx);
  }

  std::size_t size() const noexcept { return n_; }
  double dt() const noexcept { return dt_; }

  void apply(std::span<const double> v, std::span<double> out) const {
    detail::require_same_size(n_, v.size(), "stencil apply");
    detail::require_same_size(n_, out.size(), "stencil apply");
    out[0] = v[0];
    out[n_ - 1] = v[n_ - 1];
    for (std::size_t i = 1; i + 1 < n_; ++i) {
      const double lv = lower_ * v[i - 1] + center_ * v[i] + upper_ * v[i + 1];
      out[i] = v[i] - dt_ * lv;
    }
  }

  /// Explicit twin of the matrix-free operator.
  CsrMatrix to_csr() const {
    std::vector<Triplet> t;
    t.push_back({0, 0, 1.0});
    for (std::size_t i = 1; i + 1 < n_; ++i) {
      t.push_back({i, i - 1, -dt_ * lower_});
      t.push_back({i, i, 1.0 - dt_ * center_});
      t.push_back({i, i + 1, -dt_ * upper_});
    }
    t.push_back({n_ - 1, n_ - 1, 1.0});
    return CsrMatrix::from_triplets(n_, n_, std::move(t));
  }

 private:
  std::size_t n_ = 0;
  double dt_ = 0.0;
  double lower_ = 0.0;
  double center_ = 0.0;
  double upper_ = 0.0;
};

/// Backward-Euler operator for u_t = alpha u_xx on nx points spaced dx.
inline StencilOperator1d heat1d_operator(std::size_t nx, double dx, double dt, double alpha) {
  if (!(dx > 0.0)) throw ConfigError("heat1d: dx must be > 0");
  if (!(alpha > 0.0)) throw ConfigError("heat1d: alpha must be > 0");
  if (nx < 3) throw ConfigError("heat1d: nx must be >= 3");
  StencilSpec spec;
  spec.coefficients[{2, 0}] = alpha;
  spec.grid_points = {nx};
  spec.spacing = {dx};
  return StencilOperator1d(spec, dt);
}

// ---------------------------------------------------------------------------
// Time stepping with progressive preconditioning

enum class RhsMode {
  /// A u^{n+1} = u^n: each solution is the next right-hand side.
  Evolve,
  /// Every step solves the same system again (benchmark mode).
  Fixed,
};

struct TimeStepPlan {
  double dt = 1.0;
  std::size_t steps = 1;
  std::size_t reestimate_every = 1;
  std::size_t d = 1;
  std::optional<std::size_t> history_cap;
  /// Drop the probe history at the start of every step.
  bool reset_history = false;
  RhsMode rhs = RhsMode::Evolve;

  void validate() const {
    if (!(dt > 0.0)) throw ConfigError("plan: dt must be > 0");
    if (steps < 1) throw ConfigError("plan: steps must be >= 1");
    if (reestimate_every < 1) throw ConfigError("plan: reestimate_every must be >= 1");
    if (d < 1) throw ConfigError("plan: d must be >= 1");
  }
};

struct PreparedPreconditioner {
  Preconditioner precond;
  std::vector<std::size_t> repaired_rows;
  /// Factorization failed and the identity is used instead.
  bool identity_fallback = false;
  std::string note;
};

/// Repairs degenerate rows of N, then factors it; if that still fails the
/// identity preconditioner is returned with the reason attached.
inline PreparedPreconditioner prepare_preconditioner(BandedMatrix n_matrix) {
  const std::size_t n = n_matrix.size();
  auto repaired = repair_diagonal(n_matrix);
  try {
    return {Preconditioner(n_matrix), std::move(repaired), false, {}};
  } catch (const PreconditionerError& e) {
    return {Preconditioner::identity(n), std::move(repaired), true, e.what()};
  }
}

struct StepRecord {
  std::size_t step = 0;
  SolveReport report;
  bool preconditioned = false;
  bool identity_fallback = false;
  std::size_t repaired_rows = 0;
  std::string note;
};

struct DriverResult {
  std::vector<StepRecord> steps;
  Vector state;
  /// Latest fitted N, if any refit succeeded.
  std::optional<BandedMatrix> preconditioner;
  std::optional<PreconditionerEstimate> last_estimate;
  ProbeHistory history;
};

/// A solve inside the driver failed; `step` is 1-based.
class StepError : public Error {
 public:
  StepError(std::size_t step, const std::string& what, std::optional<SolveReport> partial = {})
      : Error("step " + std::to_string(step) + ": " + what),
        step_(step),
        partial_(std::move(partial)) {}
  std::size_t step() const noexcept { return step_; }
  const std::optional<SolveReport>& partial_report() const noexcept { return partial_; }

 private:
  std::size_t step_;
  std::optional<SolveReport> partial_;
};

/// Solves A u^{n+1} = rhs for plan.steps steps starting from x0 = 0. Step 1
/// runs with N = I; after every `reestimate_every` solves N is refit from
/// the accumulated probe history and used from the next step on.
template <LinearOperator Op>
DriverResult time_step_driver(const Op& a, std::span<const double> b0, const TimeStepPlan& plan,
                              const GmresConfig& cfg) {
  plan.validate();
  cfg.validate();
  const std::size_t n = a.size();
  detail::require_same_size(n, b0.size(), "time_step_driver");

  DriverResult out{{}, Vector(b0.begin(), b0.end()), std::nullopt, std::nullopt,
                   ProbeHistory(n, plan.history_cap)};
  Vector rhs(b0.begin(), b0.end());
  const Vector x0(n, 0.0);

  for (std::size_t step = 1; step <= plan.steps; ++step) {
    if (plan.reset_history) out.history.clear();
    StepRecord rec;
    rec.step = step;

    std::optional<PreparedPreconditioner> prepared;
    if (out.preconditioner) {
      prepared = prepare_preconditioner(*out.preconditioner);
      rec.preconditioned = !prepared->identity_fallback;
      rec.identity_fallback = prepared->identity_fallback;
      rec.repaired_rows = prepared->repaired_rows.size();
      rec.note = prepared->note;
    }
    const Preconditioner precond = prepared ? prepared->precond : Preconditioner::identity(n);

    try {
      auto result = psp_gmres(a, rhs, x0, precond, cfg, out.history);
      rec.report = std::move(result.report);
      out.state = std::move(result.x);
    } catch (const DivergenceError& e) {
      throw StepError(step, e.what(), e.report());
    } catch (const Error& e) {
      throw StepError(step, e.what());
    }
    out.steps.push_back(std::move(rec));
    if (plan.rhs == RhsMode::Evolve) rhs = out.state;

    if (step < plan.steps && step % plan.reestimate_every == 0) {
      try {
        auto est = mrep(out.history, plan.d);
        out.preconditioner = est.n;
        out.last_estimate = std::move(est);
      } catch (const InsufficientSamplesError&) {
        // keep the previous N (or the identity)
      }
    }
  }
  return out;
}

}  // namespace psp
