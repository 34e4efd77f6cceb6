// Command-line driver: simulate, sweep, certify, verify-identities, refine.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "chemo/cli/config.hpp"
#include "chemo/cli/runs.hpp"

using namespace chemo::cli;

int main(int argc, char** argv) {
  CLI::App app{"Simulator and verification harness for a regularized two-species chemotaxis system"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int levels = 0;
  auto* config_opt = app.add_option("--config", config_path, "key = value configuration file");
  auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output.dir)");
  auto* seed_opt = app.add_option("--seed", seed, "seed for test functions, probes and random data");
  auto* levels_opt =
      app.add_option("--levels", levels, "refinement levels for certify and refine");

  app.add_subcommand("simulate", "single run: diagnostics, snapshots, estimates");
  app.add_subcommand("sweep", "eps ladder: Cauchy gaps and eps-uniformity bands");
  app.add_subcommand("certify", "weak-form and entropy certificates on a calibrated ladder");
  app.add_subcommand("verify-identities", "closed-form entropy identities on a (p, k) lattice");
  app.add_subcommand("refine", "refinement study: solution and residual orders");

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig config =
        *config_opt ? load_run_config_file(config_path) : load_run_config(ConfigMap{});
    if (*out_opt) config.out_dir = out_dir;
    if (*seed_opt) config.seed = seed;
    if (*levels_opt) config.levels = levels;
    config.validate();

    if (command == "simulate") return run_simulate(config);
    if (command == "sweep") return run_sweep(config);
    if (command == "certify") return run_certify(config, config.levels);
    if (command == "refine") return run_refine(config, config.levels);
    if (command == "verify-identities")
      return run_verify_identities(config, *out_opt ? std::optional<std::string>(out_dir)
                                                    : std::nullopt);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
