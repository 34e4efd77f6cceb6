#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "chemo/cli/config.hpp"
#include "chemo/cli/csv.hpp"
#include "chemo/cli/presets.hpp"
#include "chemo/cli/runs.hpp"

using namespace chemo;
using namespace chemo::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("chemo_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

struct Exec {
  int status;
  std::string err;
};

// Runs the CLI binary; stderr is captured into a file under `dir`.
Exec run_cli(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + CHEMO_BINARY + "\" " + args + " > /dev/null 2> \"" +
                          err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

// A small, fast configuration for end-to-end runs.
std::string small_config(const fs::path& out) {
  return "grid.cells = 16\n"
         "time.T = 0.2\n"
         "output.times = 0.1\n"
         "output.frame_interval = 0.02\n"
         "solver.max_dt = 0.005\n"
         "probe.trials = 20\n"
         "certify.tests = 4\n"
         "output.dir = " + out.string() + "\n";
}

}  // namespace

TEST(ConfigParse, KeysCommentsAndWhitespace) {
  const ConfigMap m = parse_config_text("# header\n  a.b = 1.5  # trailing\n\nc=x y\n");
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m.at("a.b"), "1.5");
  EXPECT_EQ(m.at("c"), "x y");
  EXPECT_THROW(parse_config_text("a = 1\na = 2\n"), ConfigError);
  EXPECT_THROW(parse_config_text("no equals sign\n"), ConfigError);
  EXPECT_THROW(parse_config_text(" = 3\n"), ConfigError);
  EXPECT_THROW(parse_config_file("/nonexistent/chemo.cfg"), ConfigError);
}

TEST(ConfigParse, ScalarParsers) {
  EXPECT_DOUBLE_EQ(parse_real("f", "2.5e-1"), 0.25);
  EXPECT_THROW(parse_real("f", "abc"), ConfigError);
  EXPECT_THROW(parse_real("f", "1.0x"), ConfigError);
  EXPECT_EQ(parse_integer("n", "-7"), -7);
  EXPECT_THROW(parse_integer("n", "1.5"), ConfigError);
  EXPECT_EQ(parse_u64("s", "18446744073709551615"), 18446744073709551615ull);
  EXPECT_TRUE(parse_bool("b", "true"));
  EXPECT_FALSE(parse_bool("b", "0"));
  EXPECT_THROW(parse_bool("b", "maybe"), ConfigError);
  EXPECT_EQ(parse_real_list("l", "1, 2.5 ,3"), (std::vector<double>{1.0, 2.5, 3.0}));
}

TEST(ConfigLoad, DefaultsAreCanonical) {
  const RunConfig c = load_run_config({});
  EXPECT_EQ(c.grid.cells[0], 64);
  EXPECT_EQ(c.grid.dim, 2);
  EXPECT_DOUBLE_EQ(c.model.theta, 2.0);
  EXPECT_DOUBLE_EQ(c.model.eps, 0.25);
  EXPECT_DOUBLE_EQ(c.T, 2.0);
  EXPECT_DOUBLE_EQ(c.solver.cfl_safety, 0.5);
  EXPECT_EQ(c.preset, "canonical");
  EXPECT_EQ(c.initial[0].kind, FieldKind::GaussianBump);
  EXPECT_DOUBLE_EQ(c.initial[0].mass, 0.5);
  EXPECT_DOUBLE_EQ(c.initial[1].mass, 0.3);
  EXPECT_DOUBLE_EQ(c.initial[2].value, 0.1);
  EXPECT_EQ(c.sweep_eps.size(), 7u);
}

TEST(ConfigLoad, ErrorsNameTheField) {
  auto field_of = [](const std::string& text) -> std::string {
    try {
      load_run_config(parse_config_text(text)).validate();
    } catch (const ConfigError& e) {
      return e.field();
    }
    return "";
  };
  EXPECT_EQ(field_of("model.theta = 0.9\n"), "model.theta");
  EXPECT_EQ(field_of("model.eps = 1\n"), "model.eps");
  EXPECT_EQ(field_of("grid.cells = 0\n"), "grid.cells");
  EXPECT_EQ(field_of("solver.cfl_safety = 2\n"), "solver.cfl_safety");
  EXPECT_EQ(field_of("initial.preset = nope\n"), "initial.preset");
  EXPECT_EQ(field_of("certify.weights = 1:1\n"), "certify.weights");
  EXPECT_EQ(field_of("identities.samples = 0\n"), "identities.samples");
  EXPECT_EQ(field_of("bogus.key = 1\n"), "bogus.key");
  EXPECT_EQ(field_of("time.T = -1\n"), "time.T");
  EXPECT_EQ(field_of("model.theta = 2\n"), "");
}

TEST(ConfigLoad, LadderAndSweepValidation) {
  RunConfig c = load_run_config({});
  EXPECT_THROW(c.validate_ladder(1), ConfigError);
  EXPECT_NO_THROW(c.validate_ladder(3));
  c.sweep_eps = {0.25, 0.5};
  EXPECT_THROW(c.validate_sweep(), ConfigError);
}

TEST(ConfigLoad, EchoRoundTrips) {
  RunConfig c = load_run_config(parse_config_text(
      "grid.dim = 1\ngrid.cells = 128\ngrid.length = 2\nmodel.theta = 1.6\nmodel.eps = 0.125\n"
      "initial.preset = constant-half\ninitial.w = random-seeded\ninitial.w.mean = 0.3\n"
      "initial.w.amplitude = 0.2\nseed = 99\ncertify.weights = 1:2, 2:5.5\n"));
  const std::string echo = echo_config(c);
  const RunConfig back = load_run_config(parse_config_text(echo));
  EXPECT_EQ(echo_config(back), echo);
  EXPECT_EQ(back.grid.dim, 1);
  EXPECT_EQ(back.grid.cells[0], 128);
  EXPECT_EQ(back.seed, 99u);
  ASSERT_EQ(back.weights.size(), 2u);
  EXPECT_DOUBLE_EQ(back.weights[1].k, 5.5);
  EXPECT_EQ(back.initial[2].kind, FieldKind::RandomSeeded);
}

TEST(Presets, FieldShapes) {
  Grid g(64, 64, 1.0, 1.0);
  FieldSpec gauss;
  gauss.kind = FieldKind::GaussianBump;
  gauss.mass = 0.5;
  gauss.center = {0.5, 0.5};
  gauss.sigma = 0.1;
  EXPECT_NEAR(integrate(make_field(g, gauss, 1)), 0.5, 1e-6);
  FieldSpec rnd;
  rnd.kind = FieldKind::RandomSeeded;
  rnd.mean = 2.0;
  rnd.amplitude = 0.5;
  const Field a = make_field(g, rnd, 7), b = make_field(g, rnd, 7), c = make_field(g, rnd, 8);
  EXPECT_TRUE((a.values() == b.values()).all());
  EXPECT_FALSE((a.values() == c.values()).all());
  EXPECT_GE(a.values().minCoeff(), 1.0);
  EXPECT_LE(a.values().maxCoeff(), 3.0);
  RunConfig half = load_run_config(parse_config_text("initial.preset = constant-half\n"));
  const InitialData d = make_base_data(half, g);
  EXPECT_EQ(d.u.values().maxCoeff(), 0.5);
  EXPECT_EQ(d.w.values().minCoeff(), 0.5);
}

TEST(Csv, FullPrecisionAndColumnCheck) {
  EXPECT_EQ(format_real(0.1), "0.10000000000000001");
  EXPECT_EQ(format_real(1.0), "1");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
  const fs::path dir = scratch("csv");
  {
    CsvWriter w((dir / "a.csv").string(), {"x", "name", "ok"});
    w.cell(0.25).cell("row").cell(true);
    w.end_row();
    w.cell(1LL);
    EXPECT_THROW(w.end_row(), std::logic_error);
  }
  const auto rows = read_csv((dir / "a.csv").string());
  ASSERT_GE(rows.size(), 2u);
  EXPECT_EQ(rows[0], (std::vector<std::string>{"x", "name", "ok"}));
  EXPECT_EQ(rows[1][0], "0.25");
  EXPECT_EQ(rows[1][1], "row");
}

TEST(FittedOrder, SlopesAndSaturation) {
  const std::vector<double> h{0.25, 0.125, 0.0625};
  EXPECT_NEAR(*fitted_order(h, {0.5, 0.125, 0.03125}), 2.0, 1e-12);
  EXPECT_NEAR(*fitted_order(h, {1.0, 0.5, 0.25}), 1.0, 1e-12);
  EXPECT_FALSE(fitted_order(h, {1e-3, 1e-8, 1e-14}).has_value());
  EXPECT_THROW(fitted_order({0.1}, {1.0}), std::invalid_argument);
}

TEST(Threads, WorkerCountHonoursEnvironment) {
  ::setenv("CHEMO_THREADS", "3", 1);
  EXPECT_EQ(worker_count(10), 3);
  EXPECT_EQ(worker_count(2), 2);
  ::unsetenv("CHEMO_THREADS");
  EXPECT_GE(worker_count(4), 1);
  std::vector<int> hit(17, 0);
  parallel_for(17, [&](int i) { hit[i] += i; });
  for (int i = 0; i < 17; ++i) EXPECT_EQ(hit[i], i);
  EXPECT_THROW(parallel_for(3, [](int i) { if (i == 1) throw std::runtime_error("x"); }),
               std::runtime_error);
}

TEST(Identities, VerifyRunPasses) {
  const IdentitiesResult r = verify_identities_run(100, 1);
  EXPECT_EQ(r.reports.size(), 12u);
  EXPECT_TRUE(r.pass);
}

TEST(Cli, SimulateWritesArtifacts) {
  const fs::path dir = scratch("simulate");
  write_text(dir / "run.cfg", small_config(dir / "out"));
  const Exec e = run_cli("simulate --config \"" + (dir / "run.cfg").string() + "\"", dir);
  EXPECT_EQ(e.status, 0) << e.err;
  for (const char* f : {"manifest.cfg", "diagnostics.csv", "estimates.csv", "fields_0.csv",
                        "fields_0.1.csv", "fields_0.2.csv"})
    EXPECT_TRUE(fs::exists(dir / "out" / f)) << f;
  const auto rows = read_csv((dir / "out" / "estimates.csv").string());
  ASSERT_GT(rows.size(), 1u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][6], "1") << rows[i][1];
  const auto fields = read_csv((dir / "out" / "fields_0.1.csv").string());
  EXPECT_EQ(fields[0], (std::vector<std::string>{"x", "y", "u", "v", "w"}));
  EXPECT_EQ(fields.size(), 1u + 16 * 16);
}

TEST(Cli, OutputsAreByteIdenticalAndManifestReruns) {
  const fs::path dir = scratch("repro");
  write_text(dir / "run.cfg", small_config(dir / "a"));
  ASSERT_EQ(run_cli("simulate --config \"" + (dir / "run.cfg").string() + "\"", dir).status, 0);
  ASSERT_EQ(run_cli("simulate --config \"" + (dir / "run.cfg").string() + "\" --out \"" +
                        (dir / "b").string() + "\"",
                    dir)
                .status,
            0);
  // Rerun from the manifest of the first run.
  ASSERT_EQ(run_cli("simulate --config \"" + (dir / "a" / "manifest.cfg").string() + "\" --out \"" +
                        (dir / "c").string() + "\"",
                    dir)
                .status,
            0);
  for (const char* f : {"diagnostics.csv", "estimates.csv", "fields_0.2.csv"}) {
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "c" / f)) << f;
  }
}

TEST(Cli, ExitCodesAndMessages) {
  const fs::path dir = scratch("exit");
  write_text(dir / "theta.cfg", "model.theta = 0.9\n");
  Exec e = run_cli("simulate --config \"" + (dir / "theta.cfg").string() + "\"", dir);
  EXPECT_EQ(e.status, kExitConfig);
  EXPECT_NE(e.err.find("model.theta"), std::string::npos) << e.err;

  write_text(dir / "small.cfg", small_config(dir / "out"));
  e = run_cli("refine --levels 1 --config \"" + (dir / "small.cfg").string() + "\"", dir);
  EXPECT_EQ(e.status, kExitConfig);
  EXPECT_NE(e.err.find("levels"), std::string::npos) << e.err;

  write_text(dir / "samples.cfg", "identities.samples = 0\n");
  e = run_cli("verify-identities --config \"" + (dir / "samples.cfg").string() + "\"", dir);
  EXPECT_EQ(e.status, kExitConfig);

  e = run_cli("verify-identities", dir);
  EXPECT_EQ(e.status, 0) << e.err;

  e = run_cli("--config \"" + (dir / "missing.cfg").string() + "\" simulate", dir);
  EXPECT_EQ(e.status, kExitConfig);

  e = run_cli("", dir);
  EXPECT_NE(e.status, 0);
}

TEST(Cli, TZeroSimulateHasSingleSnapshot) {
  const fs::path dir = scratch("tzero");
  write_text(dir / "run.cfg", "grid.cells = 8\ntime.T = 0\noutput.times = 0\noutput.dir = " +
                                  (dir / "out").string() + "\n");
  const Exec e = run_cli("simulate --config \"" + (dir / "run.cfg").string() + "\"", dir);
  EXPECT_EQ(e.status, 0) << e.err;
  const auto diag = read_csv((dir / "out" / "diagnostics.csv").string());
  EXPECT_EQ(diag.size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "out" / "fields_0.csv"));
}

TEST(Cli, CertifyZeroDataPasses) {
  const fs::path dir = scratch("certify_zero");
  write_text(dir / "run.cfg", small_config(dir / "out") + "initial.preset = zero\n");
  const Exec e = run_cli("certify --levels 2 --config \"" + (dir / "run.cfg").string() + "\"", dir);
  EXPECT_EQ(e.status, 0) << e.err;
  const auto rows = read_csv((dir / "out" / "certificates.csv").string());
  ASSERT_GT(rows.size(), 1u);
  const auto& header = rows[0];
  const auto col = std::find(header.begin(), header.end(), "residual") - header.begin();
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_LE(std::abs(std::stod(rows[i][col])), 1e-15);
}

TEST(Cli, SweepOfZeroDataHasZeroGaps) {
  const fs::path dir = scratch("sweep_zero");
  write_text(dir / "run.cfg", small_config(dir / "out") +
                                  "initial.preset = zero\nsweep.eps = 0.5, 0.25, 0.125\n");
  const Exec e = run_cli("sweep --config \"" + (dir / "run.cfg").string() + "\"", dir);
  EXPECT_EQ(e.status, 0) << e.err;
  const auto rows = read_csv((dir / "out" / "sweep.csv").string());
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i)
    for (int c = 2; c <= 4; ++c)
      if (!rows[i][c].empty()) EXPECT_EQ(std::stod(rows[i][c]), 0.0);
}

TEST(Cli, RefineConstantConfigIsSaturated) {
  RunConfig c = load_run_config_file(std::string(CHEMO_CONFIG_DIR) + "/constant-half.cfg");
  c.grid.cells = {16, 16};
  c.T = 0.2;
  c.output_times = {0.1};
  c.test_count = 4;
  const RefineResult r = refine_run(c, 2);
  // u and v are exact; w only sees the time error of w' = 1 - w, which is
  // spatially constant and bounded by the coarse step.
  for (const auto& d : r.differences) {
    EXPECT_LT(d[0], 1e-12);
    EXPECT_LT(d[1], 1e-12);
    EXPECT_LT(d[2], 4.0 * c.solver.max_dt);
  }
  EXPECT_FALSE(r.solution_order[0].has_value());
  EXPECT_FALSE(r.solution_order[1].has_value());
}
