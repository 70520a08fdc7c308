// Command-line front end: benchmark reproduction, single solves on Matrix
// Market input, and replay of a recorded manifest.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

void add_solver_flags(CLI::App& cmd, psp::cli::RunManifest& m) {
  cmd.add_option("--seed", m.seed, "generator seed");
  cmd.add_option("--band-d", m.d, "preconditioner half-bandwidth d");
  cmd.add_option("--epsilon", m.epsilon, "absolute residual tolerance");
  cmd.add_option("--max-inner", m.n_a, "Krylov vectors per restart cycle (n_A)");
  cmd.add_option("--restarts", m.n_r, "maximum restart cycles (n_r)");
  cmd.add_option("--steps", m.steps, "solves in the driver (MREP refit between them)");
  cmd.add_option("--out", m.out, "output directory");
  cmd.add_option("--history-cap", m.history_cap, "ring-buffer cap on stored probe pairs");
  cmd.add_flag("--reset-history", m.reset_history, "drop the probe history before every solve");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Progressively preconditioned restarted GMRES"};
  app.require_subcommand(1);

  psp::cli::RunManifest bench;
  bench.subcommand = "benchmark";
  auto* bench_cmd = app.add_subcommand("benchmark", "two-step plain vs preconditioned runs");
  bench_cmd->add_option("--sizes", bench.sizes, "system sizes")->delimiter(',');
  bench_cmd->add_option("--margin", bench.margin, "diagonal dominance margin of the generator");
  bench_cmd->add_flag("--emit-plot", bench.emit_plot, "write an SVG convergence plot per size");
  add_solver_flags(*bench_cmd, bench);

  psp::cli::RunManifest solve;
  solve.subcommand = "solve";
  solve.steps = 1;
  auto* solve_cmd = app.add_subcommand("solve", "solve a Matrix Market system");
  solve_cmd->add_option("--matrix", solve.matrix, "Matrix Market coordinate file");
  solve_cmd->add_option("--rhs", solve.rhs, "right-hand side (default 1..n)");
  add_solver_flags(*solve_cmd, solve);

  std::string manifest_path;
  std::string replay_out;
  auto* replay_cmd = app.add_subcommand("replay", "re-run a recorded manifest.json");
  replay_cmd->add_option("manifest", manifest_path, "manifest.json")->required();
  replay_cmd->add_option("--out", replay_out, "output directory (default: as recorded)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return psp::cli::kUsage;
  }

  if (*bench_cmd) return psp::cli::run(bench);
  if (*solve_cmd) return psp::cli::run(solve);

  psp::cli::RunManifest m;
  try {
    std::ifstream in(manifest_path);
    if (!in) {
      std::cerr << "cannot open " << manifest_path << '\n';
      return psp::cli::kParse;
    }
    m = psp::cli::manifest_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    std::cerr << manifest_path << ": " << e.what() << '\n';
    return psp::cli::kParse;
  }
  if (!replay_out.empty()) m.out = replay_out;
  return psp::cli::run(m);
}
