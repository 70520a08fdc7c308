#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "commands.hpp"

namespace fs = std::filesystem;
using psp::cli::RunManifest;

namespace {

fs::path scratch(const std::string& name) {
  const auto p = fs::temp_directory_path() / ("psp_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& p, const std::string& text) {
  std::ofstream(p) << text;
}

int run_quiet(const RunManifest& m) {
  std::ostringstream log;
  return psp::cli::run(m, log);
}

RunManifest solve_manifest(const fs::path& matrix, const fs::path& out) {
  RunManifest m;
  m.subcommand = "solve";
  m.steps = 1;
  m.matrix = matrix.string();
  m.out = out.string();
  return m;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(PSP_GMRES_BIN) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST(Cli, EmptySizesIsUsageError) {
  RunManifest m;
  m.subcommand = "benchmark";
  m.out = scratch("empty").string();
  EXPECT_EQ(run_quiet(m), psp::cli::kUsage);
}

TEST(Cli, IdentitySolve) {
  const auto dir = scratch("identity");
  write_file(dir / "a.mtx",
             "%%MatrixMarket matrix coordinate real general\n3 3 3\n1 1 1\n2 2 1\n3 3 1\n");
  write_file(dir / "b.txt", "4 5 6\n");
  auto m = solve_manifest(dir / "a.mtx", dir / "out");
  m.rhs = (dir / "b.txt").string();
  ASSERT_EQ(run_quiet(m), psp::cli::kOk);
  std::istringstream sol(slurp(dir / "out" / "solution.csv"));
  std::string line;
  std::getline(sol, line);
  EXPECT_EQ(line, "index,value");
  for (int i = 1; i <= 3; ++i) {
    ASSERT_TRUE(std::getline(sol, line));
    EXPECT_NEAR(std::stod(line.substr(line.find(',') + 1)), 3.0 + i, 1e-14);
  }
  const auto report = slurp(dir / "out" / "report.csv");
  EXPECT_NE(report.find("iterations_total,1\n"), std::string::npos);
  EXPECT_NE(report.find("converged,1\n"), std::string::npos);
}

TEST(Cli, MalformedMatrixIsParseError) {
  const auto dir = scratch("malformed");
  write_file(dir / "a.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 1\n1 z 1\n");
  EXPECT_EQ(run_quiet(solve_manifest(dir / "a.mtx", dir / "out")), psp::cli::kParse);
  write_file(dir / "c.mtx", "%%MatrixMarket matrix coordinate complex general\n1 1 1\n1 1 1 0\n");
  EXPECT_EQ(run_quiet(solve_manifest(dir / "c.mtx", dir / "out")), psp::cli::kParse);
}

TEST(Cli, DimensionMismatchIsUsageError) {
  const auto dir = scratch("mismatch");
  write_file(dir / "a.mtx", "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 1\n2 2 1\n");
  write_file(dir / "b.txt", "1 2 3\n");
  auto m = solve_manifest(dir / "a.mtx", dir / "out");
  m.rhs = (dir / "b.txt").string();
  EXPECT_EQ(run_quiet(m), psp::cli::kUsage);
  write_file(dir / "r.mtx", "%%MatrixMarket matrix coordinate real general\n2 3 1\n1 1 1\n");
  EXPECT_EQ(run_quiet(solve_manifest(dir / "r.mtx", dir / "out")), psp::cli::kUsage);
}

TEST(Cli, NonConvergenceIsNumericalError) {
  const auto dir = scratch("budget");
  psp::GeneratorConfig g;
  g.n = 60;
  psp::io::write_matrix_market((dir / "a.mtx").string(), psp::gen_seven_diagonal(g).a);
  auto m = solve_manifest(dir / "a.mtx", dir / "out");
  m.n_a = 2;
  m.n_r = 1;
  EXPECT_EQ(run_quiet(m), psp::cli::kNumerical);
  EXPECT_TRUE(fs::exists(dir / "out" / "ERROR"));
}

TEST(Cli, MatrixMarketRoundTripMatchesInMemorySolve) {
  const auto dir = scratch("roundtrip");
  psp::GeneratorConfig g;
  g.n = 20;
  g.seed = 7;
  const auto sys = psp::gen_seven_diagonal(g);
  psp::io::write_matrix_market((dir / "a.mtx").string(), sys.a);
  ASSERT_EQ(run_quiet(solve_manifest(dir / "a.mtx", dir / "out")), psp::cli::kOk);

  psp::ProbeHistory h(20);
  psp::GmresConfig cfg;
  cfg.max_inner = 30;
  cfg.max_restarts = 200;
  const auto direct = psp::psp_gmres(sys.a, sys.b, psp::Vector(20, 0.0), cfg, h);
  std::ostringstream report;
  psp::io::write_report_csv(report, direct.report);
  EXPECT_EQ(slurp(dir / "out" / "report.csv"), report.str());
  std::ostringstream solution;
  psp::io::write_vector_csv(solution, direct.x);
  EXPECT_EQ(slurp(dir / "out" / "solution.csv"), solution.str());
}

TEST(Cli, BenchmarkArtifactsAreDeterministic) {
  const auto dir = scratch("determinism");
  RunManifest m;
  m.subcommand = "benchmark";
  m.sizes = {20, 40};
  m.emit_plot = true;
  m.out = (dir / "a").string();
  ASSERT_EQ(run_quiet(m), psp::cli::kOk);
  m.out = (dir / "b").string();
  ASSERT_EQ(run_quiet(m), psp::cli::kOk);
  for (const char* f : {"summary.csv", "residuals_n20_plain.csv", "residuals_n20_psp.csv",
                        "residuals_n40_psp.csv", "pattern_A_n20.pbm", "pattern_N_n40.pbm",
                        "plot_n20.svg"}) {
    ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
  }
  const auto manifest =
      psp::cli::manifest_from_json(nlohmann::json::parse(slurp(dir / "a" / "manifest.json")));
  EXPECT_EQ(manifest.sizes, m.sizes);
  EXPECT_EQ(manifest.seed, m.seed);
}

TEST(CliBinary, ExitCodes) {
  const auto dir = scratch("binary");
  EXPECT_EQ(run_binary("benchmark --sizes 20 --out " + (dir / "ok").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "ok" / "summary.csv"));
  EXPECT_EQ(run_binary("benchmark --out " + (dir / "none").string()), 2);
  EXPECT_EQ(run_binary("frobnicate"), 2);
  EXPECT_EQ(run_binary("benchmark --sizes 20 --epsilon -1"), 2);
  write_file(dir / "bad.mtx", "not a matrix\n");
  EXPECT_EQ(run_binary("solve --matrix " + (dir / "bad.mtx").string() + " --out " +
                       (dir / "bad").string()),
            3);
}

TEST(CliBinary, ReplayReproducesArtifacts) {
  const auto dir = scratch("replay");
  ASSERT_EQ(run_binary("benchmark --sizes 30 --seed 3 --out " + (dir / "first").string()), 0);
  ASSERT_EQ(run_binary("replay " + (dir / "first" / "manifest.json").string() + " --out " +
                       (dir / "second").string()),
            0);
  EXPECT_EQ(slurp(dir / "first" / "summary.csv"), slurp(dir / "second" / "summary.csv"));
  EXPECT_EQ(slurp(dir / "first" / "residuals_n30_psp.csv"),
            slurp(dir / "second" / "residuals_n30_psp.csv"));
  write_file(dir / "broken.json", "{ nope");
  EXPECT_EQ(run_binary("replay " + (dir / "broken.json").string()), 3);
}
