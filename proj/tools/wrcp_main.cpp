#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "wrcp/cli.hpp"
#include "wrcp/errors.hpp"

namespace {

void add_common(CLI::App* cmd, wrcp::RunManifest& manifest, std::uint64_t& seed_slot,
                bool& seed_set) {
  cmd->add_option("--config", manifest.config_path, "configuration file")->required();
  cmd->add_option("--out", manifest.out_dir, "output directory")->required();
  cmd->add_option("--seed", seed_slot, "seed override")->each([&seed_set](const std::string&) {
    seed_set = true;
  });
  cmd->add_option("--jobs", manifest.jobs,
                  "worker threads (default: WRCP_JOBS env var, then all cores)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "wrcp - conformal prediction intervals that stay valid under covariate "
      "shift plus a worst-case f-divergence-bounded conditional shift"};
  app.require_subcommand(1);

  wrcp::RunManifest manifest;
  std::uint64_t seed_slot = 0;
  bool seed_set = false;
  std::string train, test, obs, targets;

  CLI::App* simulate = app.add_subcommand("simulate", "draw synthetic source/target data");
  add_common(simulate, manifest, seed_slot, seed_set);

  CLI::App* predict = app.add_subcommand("predict", "prediction intervals for a test set");
  add_common(predict, manifest, seed_slot, seed_set);
  predict->add_option("train", train, "training CSV (x0..,y)")->required();
  predict->add_option("test", test, "test CSV (x0..)")->required();

  CLI::App* sensitivity =
      app.add_subcommand("sensitivity", "counterfactual / ITE intervals");
  add_common(sensitivity, manifest, seed_slot, seed_set);
  sensitivity->add_option("data", obs, "observational CSV (x0..,t,y)")->required();
  sensitivity->add_option("targets", targets, "target covariates CSV (x0..)")->required();

  CLI::App* experiment = app.add_subcommand("experiment", "run the benchmark grid");
  add_common(experiment, manifest, seed_slot, seed_set);
  experiment->add_flag("--resume", manifest.resume,
                       "keep (method,rho) cells already present in report.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  if (seed_set) manifest.seed = seed_slot;

  try {
    if (simulate->parsed()) {
      wrcp::cmd_simulate(manifest);
    } else if (predict->parsed()) {
      manifest.inputs = {train, test};
      wrcp::cmd_predict(manifest);
    } else if (sensitivity->parsed()) {
      manifest.inputs = {obs, targets};
      wrcp::cmd_sensitivity(manifest);
    } else if (experiment->parsed()) {
      wrcp::cmd_experiment(manifest);
    }
  } catch (const wrcp::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const wrcp::DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return 3;
  } catch (const wrcp::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
  return 0;
}
