// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "oracles.hpp"
#include "psp/psp.hpp"

using namespace psp;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) { return io::format_double(v); }

GmresConfig bench_config() {
  GmresConfig c;
  c.max_inner = 30;
  c.max_restarts = 200;
  return c;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

/// iters_step2 / iters_step1 of the two-step driver, one entry per seed.
std::vector<double> driver_ratios(std::size_t n, std::uint64_t seeds) {
  std::vector<double> out;
  for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
    GeneratorConfig g;
    g.n = n;
    g.seed = seed;
    const auto sys = gen_seven_diagonal(g);
    TimeStepPlan plan;
    plan.steps = 2;
    plan.rhs = RhsMode::Fixed;
    const auto run = time_step_driver(sys.a, sys.b, plan, bench_config());
    out.push_back(static_cast<double>(run.steps[1].report.iterations_total) /
                  static_cast<double>(run.steps[0].report.iterations_total));
  }
  return out;
}

Outcome gmres_correctness() {
  const auto t0 = Clock::now();
  std::size_t solved = 0, bad = 0;
  double worst = 0.0;
  for (std::size_t n : {20u, 80u, 150u}) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
      GeneratorConfig g;
      g.n = n;
      g.seed = seed;
      const auto sys = gen_seven_diagonal(g);
      ProbeHistory h(n);
      const auto r = psp_gmres(sys.a, sys.b, Vector(n, 0.0), bench_config(), h);
      if (!r.report.converged) {
        ++bad;
        continue;
      }
      const double res = norm2(axpy(-1.0, csr_matvec(sys.a, r.x), sys.b));
      worst = std::max(worst, res);
      if (res > 1e-8) ++bad;
      ++solved;
    }
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < 10.0, std::to_string(solved) + "/150 solves, worst true residual " +
                                    fmt(worst) + ", " + fmt(t) + " s"};
}

Outcome identity_equivalence() {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  bool lengths_match = true;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    GeneratorConfig g;
    g.n = 50;
    g.seed = seed;
    const auto sys = gen_seven_diagonal(g);
    const auto b = oracle::random_vector(50, rng);
    GmresConfig cfg;
    cfg.max_inner = 60;
    cfg.record_iterates = true;
    ProbeHistory h(50);
    const auto r = psp_gmres(sys.a, b, Vector(50, 0.0), Preconditioner::identity(50), cfg, h);
    const auto ref = oracle::reference_gmres(oracle::to_dense(sys.a), b, 60, cfg.epsilon);
    lengths_match = lengths_match && ref.size() == r.report.iterates.size();
    for (std::size_t k = 0; k < std::min(ref.size(), r.report.iterates.size()); ++k) {
      worst = std::max(worst, oracle::rel_err(r.report.iterates[k], ref[k]));
    }
  }
  return {lengths_match && worst <= 1e-12, "max relative iterate difference " + fmt(worst)};
}

Outcome mrep_recovery() {
  double worst_entry = 0.0, worst_intercept = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto a = oracle::random_dominant_banded(12, 1, rng);
    ProbeHistory h(12);
    for (std::size_t k = 0; k < 13; ++k) {
      const auto x = oracle::random_vector(12, rng);
      h.record(x, banded_matvec(a, x));
    }
    const auto est = mrep(h, 1);
    for (std::size_t i = 1; i + 1 < 12; ++i) {
      for (std::size_t j = i - 1; j <= i + 1; ++j)
        worst_entry = std::max(worst_entry, std::abs(est.n(i, j) - a(i, j)));
      worst_intercept = std::max(worst_intercept, std::abs(est.intercepts[i]));
    }
  }
  return {worst_entry <= 1e-8 && worst_intercept <= 1e-8,
          "max entry error " + fmt(worst_entry) + ", max |intercept| " + fmt(worst_intercept)};
}

Outcome thomas_vs_dense() {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<std::size_t> size(3, 200);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = size(rng);
    const auto m = oracle::random_dominant_banded(n, 1, rng);
    const auto rhs = oracle::random_vector(n, rng);
    const auto x = thomas_solve(m, rhs);
    worst = std::max(worst, oracle::rel_err(x, oracle::solve(oracle::to_dense(m), rhs)));
  }
  OpCounter c100, c200;
  thomas_solve(oracle::random_dominant_banded(100, 1, rng), oracle::random_vector(100, rng), &c100);
  thomas_solve(oracle::random_dominant_banded(200, 1, rng), oracle::random_vector(200, rng), &c200);
  const double ratio = static_cast<double>(c200.flops) / static_cast<double>(c100.flops);
  return {worst <= 1e-10 && ratio >= 1.9 && ratio <= 2.1,
          "max relative error " + fmt(worst) + ", op-count ratio " + fmt(ratio)};
}

Outcome speedup_n20() {
  const auto t0 = Clock::now();
  const double med = median(driver_ratios(20, 10));
  const double t = seconds_since(t0);
  return {med <= 0.85 && t < 5.0, "median ratio " + fmt(med) + " (need <= 0.85), " + fmt(t) + " s"};
}

Outcome speedup_trend() {
  const auto t0 = Clock::now();
  const double small = median(driver_ratios(20, 10));
  const double large = median(driver_ratios(700, 10));
  const double t = seconds_since(t0);
  return {large <= small && large <= 0.7 && t < 120.0,
          "median ratio n=20 " + fmt(small) + ", n=700 " + fmt(large) + " (need <= 0.7), " +
              fmt(t) + " s"};
}

Outcome givens_consistency() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> dist(-1, 1);
  double worst = 0.0;
  for (std::size_t k = 1; k <= 20; ++k) {
    for (int trial = 0; trial < 10; ++trial) {
      GmresWorkspace ws(1, k);
      oracle::Dense hd(k + 1, k);
      for (std::size_t j = 0; j < k; ++j)
        for (std::size_t i = 0; i <= j + 1; ++i) hd(i, j) = ws.h(i, j) = dist(rng);
      const double beta = 1.0 + std::abs(dist(rng));
      ws.g()[0] = beta;
      double residual = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        ws.g()[j + 1] = 0.0;
        residual = givens_update(ws, j).residual;
      }
      oracle::Vec rhs(k + 1, 0.0);
      rhs[0] = beta;
      const auto ls = oracle::least_squares(hd, rhs);
      worst = std::max(worst, std::abs(residual - ls.residual) / ls.residual);
    }
  }
  return {worst <= 1e-12, "max relative difference " + fmt(worst)};
}

Outcome heat_oracle() {
  const std::size_t nx = 64;
  const double dx = 1.0 / static_cast<double>(nx - 1);
  const double dt = 1e-3, alpha = 1.0;
  const auto op = heat1d_operator(nx, dx, dt, alpha);
  Vector u0(nx);
  for (std::size_t j = 1; j + 1 < nx; ++j) u0[j] = std::sin(std::numbers::pi * dx * static_cast<double>(j));
  TimeStepPlan plan;
  plan.dt = dt;
  GmresConfig cfg;
  cfg.epsilon = 1e-13;
  cfg.max_inner = 64;
  const auto run = time_step_driver(op, u0, plan, cfg);
  const double lambda = (2.0 - 2.0 * std::cos(std::numbers::pi * dx)) / (dx * dx);
  const double decay = 1.0 / (1.0 + dt * alpha * lambda);
  double decay_err = 0.0;
  for (std::size_t j = 0; j < nx; ++j) decay_err = std::max(decay_err, std::abs(run.state[j] - decay * u0[j]));

  const auto csr = op.to_csr();
  std::mt19937_64 rng(5);
  double twin = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto v = oracle::random_vector(nx, rng);
    twin = std::max(twin, oracle::rel_err(psp::apply(op, v), csr_matvec(csr, v)));
  }
  return {decay_err <= 1e-8 && twin <= 1e-13,
          "decay error " + fmt(decay_err) + ", matrix-free vs CSR " + fmt(twin)};
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const auto root = fs::temp_directory_path() / "psp_acceptance_determinism";
  fs::remove_all(root);
  cli::RunManifest m;
  m.subcommand = "benchmark";
  m.sizes = {20, 80};
  m.emit_plot = true;
  std::ostringstream log;
  m.out = (root / "a").string();
  const int ra = cli::run(m, log);
  m.out = (root / "b").string();
  const int rb = cli::run(m, log);
  std::size_t compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    if (entry.path().extension() != ".csv") continue;
    std::ifstream fa(entry.path()), fb(root / "b" / entry.path().filename());
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    ++compared;
    differing += sa.str() != sb.str();
  }
  return {ra == 0 && rb == 0 && compared > 0 && differing == 0,
          std::to_string(compared) + " CSV files compared, " + std::to_string(differing) + " differ"};
}

Outcome degradation_safety() {
  std::size_t fallbacks = 0, converged = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    GeneratorConfig g;
    g.n = 80;
    g.seed = seed;
    const auto sys = gen_seven_diagonal(g);
    ProbeHistory h(80);
    psp_gmres(sys.a, sys.b, Vector(80, 0.0), bench_config(), h);
    auto n = mrep(h, 1).n;
    // two identical rows make the band singular
    const std::size_t i = 10 + 5 * (seed % 10);
    for (std::size_t r : {i, i + 1}) {
      for (std::size_t j = r - 1; j <= r + 1; ++j) n.set(r, j, 0.0);
      n.set(r, i, 1.0);
      n.set(r, i + 1, 1.0);
    }
    const auto prepared = prepare_preconditioner(n);
    fallbacks += prepared.identity_fallback;
    const auto r = psp_gmres(sys.a, sys.b, Vector(80, 0.0), prepared.precond, bench_config(), h);
    const double res = norm2(axpy(-1.0, csr_matvec(sys.a, r.x), sys.b));
    converged += r.report.converged && res <= 1e-8;
  }
  return {fallbacks == 10 && converged == 10,
          std::to_string(fallbacks) + "/10 fell back to identity, " + std::to_string(converged) +
              "/10 converged"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 gmres correctness", gmres_correctness},
      {"2 identity-preconditioner equivalence", identity_equivalence},
      {"3 mrep exact recovery", mrep_recovery},
      {"4 thomas vs dense", thomas_vs_dense},
      {"5 speedup at n=20", speedup_n20},
      {"6 speedup trend with size", speedup_trend},
      {"7 givens residual consistency", givens_consistency},
      {"8 heat-equation oracle", heat_oracle},
      {"9 determinism", determinism},
      {"10 degradation safety", degradation_safety},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
