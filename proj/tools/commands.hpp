#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "psp/io.hpp"
#include "psp/psp.hpp"

namespace psp::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kParse = 3, kNumerical = 4 };

/// Everything a run depends on. Validated before any computation and written
/// to <out>/manifest.json.
struct RunManifest {
  std::string subcommand;
  std::vector<std::size_t> sizes;
  std::uint64_t seed = 1;
  std::size_t d = 1;
  double epsilon = 1e-8;
  std::size_t n_a = 30;
  std::size_t n_r = 200;
  std::size_t steps = 2;
  double margin = 1.0;
  std::string matrix;
  std::string rhs;
  std::string out = "out";
  bool emit_plot = false;
  std::optional<std::size_t> history_cap;
  bool reset_history = false;
};

inline nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json j;
  j["subcommand"] = m.subcommand;
  j["sizes"] = m.sizes;
  j["seed"] = m.seed;
  j["band_d"] = m.d;
  j["epsilon"] = m.epsilon;
  j["max_inner"] = m.n_a;
  j["restarts"] = m.n_r;
  j["steps"] = m.steps;
  j["margin"] = m.margin;
  j["matrix"] = m.matrix;
  j["rhs"] = m.rhs;
  j["out"] = m.out;
  j["emit_plot"] = m.emit_plot;
  j["history_cap"] = m.history_cap ? nlohmann::json(*m.history_cap) : nlohmann::json(nullptr);
  j["reset_history"] = m.reset_history;
  return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.subcommand = j.at("subcommand").get<std::string>();
  m.sizes = j.at("sizes").get<std::vector<std::size_t>>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.d = j.at("band_d").get<std::size_t>();
  m.epsilon = j.at("epsilon").get<double>();
  m.n_a = j.at("max_inner").get<std::size_t>();
  m.n_r = j.at("restarts").get<std::size_t>();
  m.steps = j.at("steps").get<std::size_t>();
  m.margin = j.value("margin", 1.0);
  m.matrix = j.value("matrix", std::string());
  m.rhs = j.value("rhs", std::string());
  m.out = j.value("out", std::string("out"));
  m.emit_plot = j.value("emit_plot", false);
  if (j.contains("history_cap") && !j["history_cap"].is_null()) {
    m.history_cap = j["history_cap"].get<std::size_t>();
  }
  m.reset_history = j.value("reset_history", false);
  return m;
}

inline void validate(const RunManifest& m) {
  if (m.subcommand != "benchmark" && m.subcommand != "solve") {
    throw ConfigError("unknown subcommand '" + m.subcommand + "'");
  }
  if (!(m.epsilon > 0.0)) throw ConfigError("--epsilon must be > 0");
  if (m.d < 1) throw ConfigError("--band-d must be >= 1");
  if (m.n_a < 1) throw ConfigError("--max-inner must be >= 1");
  if (m.n_r < 1) throw ConfigError("--restarts must be >= 1");
  if (m.steps < 1) throw ConfigError("--steps must be >= 1");
  if (!(m.margin > 0.0)) throw ConfigError("--margin must be > 0");
  if (m.history_cap && *m.history_cap < 1) throw ConfigError("--history-cap must be >= 1");
  if (m.out.empty()) throw ConfigError("--out must not be empty");
  if (m.subcommand == "benchmark") {
    if (m.sizes.empty()) throw ConfigError("--sizes must list at least one size");
    for (auto n : m.sizes) {
      if (n < 7) throw ConfigError("benchmark sizes must be >= 7");
      if (n < 2 * m.d + 1) throw ConfigError("size too small for --band-d");
    }
    if (m.steps < 2) throw ConfigError("benchmark needs --steps >= 2");
  } else {
    if (m.matrix.empty()) throw ConfigError("solve needs --matrix");
  }
}

inline GmresConfig gmres_config(const RunManifest& m) {
  GmresConfig c;
  c.epsilon = m.epsilon;
  c.max_inner = m.n_a;
  c.max_restarts = m.n_r;
  return c;
}

inline TimeStepPlan step_plan(const RunManifest& m) {
  TimeStepPlan p;
  p.steps = m.steps;
  p.d = m.d;
  p.history_cap = m.history_cap;
  p.reset_history = m.reset_history;
  p.rhs = RhsMode::Fixed;
  return p;
}

namespace detail {

namespace fs = std::filesystem;

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p);
  if (!f) throw Error("cannot write '" + p.string() + "'");
  return f;
}

inline void write_residuals(const fs::path& p, const SolveReport& r) {
  auto f = open_out(p);
  io::write_residual_csv(f, r.residual_history);
}

inline void write_manifest(const RunManifest& m) {
  auto f = open_out(fs::path(m.out) / "manifest.json");
  f << to_json(m).dump(2) << '\n';
}

inline void write_error_marker(const RunManifest& m, const std::string& what) {
  auto f = open_out(fs::path(m.out) / "ERROR");
  f << what << '\n';
}

}  // namespace detail

/// Runs the two-step driver on the seven-diagonal family for every size and
/// writes residual CSVs, sparsity patterns, summary.csv and optional plots.
inline int run_benchmark(const RunManifest& m, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  fs::create_directories(m.out);
  detail::write_manifest(m);

  std::ostringstream summary;
  summary << "n,iters_plain,iters_psp,ratio\n";
  std::string failures;
  for (const std::size_t n : m.sizes) {
    GeneratorConfig g;
    g.n = n;
    g.seed = m.seed;
    g.dominance_margin = m.margin;
    const auto sys = gen_seven_diagonal(g);
    const std::string tag = "n" + std::to_string(n);
    {
      auto f = detail::open_out(fs::path(m.out) / ("pattern_A_" + tag + ".pbm"));
      io::emit_pattern(f, sys.a);
    }
    DriverResult run{{}, {}, std::nullopt, std::nullopt, ProbeHistory(n)};
    try {
      run = time_step_driver(sys.a, sys.b, step_plan(m), gmres_config(m));
    } catch (const StepError& e) {
      if (e.partial_report()) {
        detail::write_residuals(fs::path(m.out) / ("residuals_" + tag + "_failed.csv"),
                                *e.partial_report());
      }
      failures += tag + ": " + e.what() + "\n";
      log << tag << ": " << e.what() << '\n';
      continue;
    }
    const auto& plain = run.steps.front().report;
    const auto& psp = run.steps.back().report;
    detail::write_residuals(fs::path(m.out) / ("residuals_" + tag + "_plain.csv"), plain);
    detail::write_residuals(fs::path(m.out) / ("residuals_" + tag + "_psp.csv"), psp);
    if (run.preconditioner) {
      auto f = detail::open_out(fs::path(m.out) / ("pattern_N_" + tag + ".pbm"));
      io::emit_pattern(f, *run.preconditioner);
    }
    if (m.emit_plot) {
      const std::vector<io::PlotSeries> series{
          {"GMRES", "#1f77b4", plain.residual_history},
          {"PSP-GMRES", "#d62728", psp.residual_history}};
      auto f = detail::open_out(fs::path(m.out) / ("plot_" + tag + ".svg"));
      io::emit_plot(f, "residual norm, n = " + std::to_string(n), series);
    }
    const double ratio = plain.iterations_total > 0
                             ? static_cast<double>(psp.iterations_total) /
                                   static_cast<double>(plain.iterations_total)
                             : 1.0;
    summary << n << ',' << plain.iterations_total << ',' << psp.iterations_total << ','
            << io::format_double(ratio) << '\n';
    log << tag << ": plain " << plain.iterations_total << " iterations, psp "
        << psp.iterations_total << " iterations, ratio " << io::format_double(ratio) << '\n';
    for (const auto& step : run.steps) {
      if (!step.report.converged) {
        failures += tag + ": step " + std::to_string(step.step) + " did not converge (residual " +
                    io::format_double(step.report.final_residual) + ")\n";
      }
    }
  }
  {
    auto f = detail::open_out(fs::path(m.out) / "summary.csv");
    f << summary.str();
  }
  if (!failures.empty()) {
    detail::write_error_marker(m, failures);
    return kNumerical;
  }
  return kOk;
}

/// Solves A x = b for a Matrix Market A. With --steps > 1 the same system is
/// solved repeatedly, refitting the preconditioner between solves.
inline int run_solve(const RunManifest& m, std::ostream& log = std::cout) {
  namespace fs = std::filesystem;
  CsrMatrix a;
  Vector b;
  try {
    a = io::read_matrix_market(m.matrix);
    if (!m.rhs.empty()) b = io::read_vector(m.rhs);
  } catch (const ParseError& e) {
    std::cerr << m.matrix << ": " << e.what() << '\n';
    return kParse;
  } catch (const UnsupportedFormatError& e) {
    std::cerr << m.matrix << ": " << e.what() << '\n';
    return kParse;
  }
  if (a.rows() != a.cols()) {
    std::cerr << "matrix must be square, got " << a.rows() << "x" << a.cols() << '\n';
    return kUsage;
  }
  if (m.rhs.empty()) {
    b.resize(a.rows());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = static_cast<double>(i + 1);
  } else if (b.size() != a.rows()) {
    std::cerr << "right-hand side has " << b.size() << " entries, matrix has " << a.rows()
              << " rows\n";
    return kUsage;
  }
  if (m.steps > 1 && a.rows() < 2 * m.d + 1) {
    std::cerr << "matrix too small for --band-d " << m.d << '\n';
    return kUsage;
  }

  fs::create_directories(m.out);
  detail::write_manifest(m);
  DriverResult run{{}, {}, std::nullopt, std::nullopt, ProbeHistory(a.rows())};
  try {
    run = time_step_driver(a, b, step_plan(m), gmres_config(m));
  } catch (const StepError& e) {
    if (e.partial_report()) {
      detail::write_residuals(fs::path(m.out) / "residuals.csv", *e.partial_report());
    }
    detail::write_error_marker(m, e.what());
    std::cerr << e.what() << '\n';
    return kNumerical;
  }
  const auto& last = run.steps.back().report;
  {
    auto f = detail::open_out(fs::path(m.out) / "solution.csv");
    io::write_vector_csv(f, run.state);
  }
  {
    auto f = detail::open_out(fs::path(m.out) / "report.csv");
    io::write_report_csv(f, last);
  }
  detail::write_residuals(fs::path(m.out) / "residuals.csv", last);
  if (run.steps.size() > 1) {
    for (const auto& s : run.steps) {
      detail::write_residuals(fs::path(m.out) / ("residuals_step" + std::to_string(s.step) + ".csv"),
                              s.report);
    }
  }
  log << "iterations " << last.iterations_total << ", final residual "
      << io::format_double(last.final_residual) << (last.converged ? "" : " (not converged)")
      << '\n';
  if (!last.converged) {
    detail::write_error_marker(m, "solve did not converge");
    return kNumerical;
  }
  return kOk;
}

/// Validates and dispatches; config errors map to exit code 2.
inline int run(const RunManifest& m, std::ostream& log = std::cout) {
  try {
    validate(m);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  try {
    return m.subcommand == "benchmark" ? run_benchmark(m, log) : run_solve(m, log);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}

}  // namespace psp::cli
