#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace wrcp {

/// What one CLI invocation is about to do: subcommand, config file, input
/// data files, output directory, overrides. Input paths are checked before
/// any work starts.
struct RunManifest {
  std::string config_path;
  std::vector<std::string> inputs;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool resume = false;
};

/// simulate: draw one source/target pair and write source.csv + target.csv.
void cmd_simulate(const RunManifest& manifest);

/// predict: intervals for test.csv calibrated on train.csv; one block per
/// rho for the robust methods. inputs = {train.csv, test.csv}.
void cmd_predict(const RunManifest& manifest);

/// sensitivity: counterfactual or ITE intervals from observational data.
/// inputs = {observational.csv, targets.csv}.
void cmd_sensitivity(const RunManifest& manifest);

/// experiment: the full benchmark grid; writes report.csv + report.json.
/// With resume, cells already present in an existing report.json are kept.
void cmd_experiment(const RunManifest& manifest);

}  // namespace wrcp
