#include "wrcp/cli.hpp"

#include <cmath>
#include <filesystem>
#include <set>

#include <nlohmann/json.hpp>

#include "wrcp/bench.hpp"
#include "wrcp/config.hpp"
#include "wrcp/csv.hpp"
#include "wrcp/debiased.hpp"
#include "wrcp/errors.hpp"
#include "wrcp/sensitivity.hpp"

namespace wrcp {

namespace {

namespace fs = std::filesystem;

void check_inputs_exist(const RunManifest& manifest, std::size_t expected_inputs) {
  if (!fs::exists(manifest.config_path)) {
    throw ConfigError("config file '" + manifest.config_path + "' does not exist");
  }
  if (manifest.inputs.size() != expected_inputs) {
    throw ConfigError("expected " + std::to_string(expected_inputs) +
                      " input file(s), got " + std::to_string(manifest.inputs.size()));
  }
  for (const std::string& in : manifest.inputs) {
    if (!fs::exists(in)) throw DataError("input file '" + in + "' does not exist");
  }
  if (manifest.out_dir.empty()) throw ConfigError("output directory not set");
  fs::create_directories(manifest.out_dir);
}

std::string out_path(const RunManifest& manifest, const std::string& name) {
  return (fs::path(manifest.out_dir) / name).string();
}

SimConfig sim_config_from(ConfigMap& cfg, const RunManifest& manifest,
                          bool with_experiment_keys) {
  const Scenario scenario = parse_scenario(cfg.get_string("scenario", "linear"));
  SimConfig sim = SimConfig::for_scenario(scenario);
  sim.d = static_cast<int>(cfg.get_int("d", sim.d));
  sim.sparsity = static_cast<int>(cfg.get_int("sparsity", sim.sparsity));
  sim.coef = cfg.get_double("coef", sim.coef);
  sim.eta = cfg.get_double("eta", sim.eta);
  sim.tilt.c_in = cfg.get_double("tilt_in", sim.tilt.c_in);
  sim.tilt.c_out = cfg.get_double("tilt_out", sim.tilt.c_out);
  sim.tilt.threshold = cfg.get_double("tilt_threshold", sim.tilt.threshold);
  sim.n_train = cfg.get_int("n_train", sim.n_train);
  sim.n_test = cfg.get_int("n_test", sim.n_test);
  sim.seed = static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  if (manifest.seed) sim.seed = *manifest.seed;
  if (sim.d < 1) throw ConfigError("d must be >= 1");
  if (sim.n_train < 2 || sim.n_test < 2) throw ConfigError("n_train/n_test too small");
  if (with_experiment_keys) {
    sim.alpha = cfg.get_double("alpha", sim.alpha);
    sim.n_runs = static_cast<int>(cfg.get_int("n_runs", sim.n_runs));
    sim.rho_grid = cfg.get_double_list("rho_grid", sim.rho_grid);
    sim.length_cap = cfg.get_double("length_cap", sim.length_cap);
    sim.divergence = FDivergenceSpec::from_name(cfg.get_string("divergence", "kl"));
    std::vector<std::string> names;
    for (Method m : sim.methods) names.push_back(method_name(m));
    sim.methods.clear();
    for (const std::string& name : cfg.get_string_list("methods", names)) {
      sim.methods.push_back(parse_method(name));
    }
    sim.jobs = manifest.jobs;
  }
  return sim;
}

Learners learners_from(ConfigMap& cfg) {
  Learners learners = Learners::defaults();
  const int knn_k = static_cast<int>(cfg.get_int("knn_k", 0));
  const double clip_lo = cfg.get_double("w_clip_lo", 1e-3);
  const double clip_hi = cfg.get_double("w_clip_hi", 1e3);
  if (knn_k != 0) {
    learners.fit_cdf = [knn_k](const Eigen::MatrixXd& X,
                               const std::vector<double>& scores) {
      return fit_conditional_cdf(X, scores, knn_k);
    };
  }
  if (clip_lo != 1e-3 || clip_hi != 1e3) {
    learners.fit_ratio = [clip_lo, clip_hi](const Eigen::MatrixXd& source_X,
                                            const Eigen::MatrixXd& target_X) {
      return fit_density_ratio(source_X, target_X, RatioClip{clip_lo, clip_hi});
    };
  }
  return learners;
}

}  // namespace

void cmd_simulate(const RunManifest& manifest) {
  check_inputs_exist(manifest, 0);
  ConfigMap cfg = ConfigMap::load(manifest.config_path);
  const SimConfig sim = sim_config_from(cfg, manifest, /*with_experiment_keys=*/false);
  cfg.check_consumed();

  Rng rng_src(mix_seed(sim.seed, seed_tag::kSourceData));
  const Dataset source = simulate_source(sim, rng_src);
  Rng rng_tgt(mix_seed(sim.seed, seed_tag::kTargetData));
  const Dataset target = simulate_target(sim, rng_tgt);

  write_dataset_csv(out_path(manifest, "source.csv"), source.X, &source.y);
  write_dataset_csv(out_path(manifest, "target.csv"), target.X, &target.y);
}

void cmd_predict(const RunManifest& manifest) {
  check_inputs_exist(manifest, 2);
  ConfigMap cfg = ConfigMap::load(manifest.config_path);

  const Method method = parse_method(cfg.get_string("method"));
  MethodConfig mcfg;
  mcfg.method = method;
  mcfg.divergence = FDivergenceSpec::from_name(cfg.get_string("divergence", "kl"));
  mcfg.alpha = cfg.get_double("alpha", 0.1);
  std::vector<double> rho_grid = {0.0};
  if (method == Method::RCP || method == Method::WRCP || method == Method::DWRCP) {
    rho_grid = cfg.get_double_list("rho_grid");
  }
  const auto seed = manifest.seed
                        ? *manifest.seed
                        : static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  const bool loo = cfg.get_bool("loo_weights", false);
  const Learners learners = learners_from(cfg);
  cfg.check_consumed();

  const CsvTable train_table = read_csv_table(manifest.inputs[0]);
  if (!train_table.y) {
    throw DataError(manifest.inputs[0] + ": training data needs a 'y' column");
  }
  const Dataset train{train_table.X, *train_table.y};
  const CsvTable test_table = read_csv_table(manifest.inputs[1]);
  if (test_table.X.cols() != train.X.cols()) {
    throw DataError("train/test covariate dimensions differ");
  }

  // RCP replaces the covariate-shift weights by widening rho with a plug-in
  // estimate of KL(Q_X || P_X).
  double rho_inflation = 0.0;
  if (method == Method::RCP) {
    const SplitPlan plan = SplitPlan::make(train.size(), test_table.X.rows(), seed);
    const auto ratio = learners.fit_ratio(select_rows(train.X, plan.tr0),
                                          select_rows(test_table.X, plan.test0));
    rho_inflation =
        rho_rcp_adjust(RobustLevel{0.0}, *ratio, select_rows(test_table.X, plan.test0))
            .rho;
  }

  std::vector<IntervalBlock> blocks;
  for (double rho : rho_grid) {
    MethodConfig cell_cfg = mcfg;
    switch (method) {
      case Method::CP:
      case Method::WCP: cell_cfg.rho = RobustLevel{0.0}; break;
      case Method::RCP: cell_cfg.rho = RobustLevel{rho + rho_inflation}; break;
      default: cell_cfg.rho = RobustLevel{rho}; break;
    }
    std::vector<PredictionInterval> intervals;
    if (method == Method::DWRCP) {
      DwrcpOptions opts;
      opts.seed = seed;
      opts.learners = learners;
      intervals = run_dwrcp(train, test_table.X, cell_cfg, opts).intervals;
    } else {
      WrcpOptions opts;
      opts.seed = seed;
      opts.learners = learners;
      opts.loo_weights = loo;
      if (method == Method::CP || method == Method::RCP) {
        opts.known_w = [](const Eigen::VectorXd&) { return 1.0; };
      }
      intervals = run_wrcp(train, test_table.X, cell_cfg, opts).intervals;
    }
    blocks.push_back({method_name(method), rho, std::move(intervals)});
  }
  write_intervals_csv(out_path(manifest, "intervals.csv"), blocks);
}

void cmd_sensitivity(const RunManifest& manifest) {
  check_inputs_exist(manifest, 2);
  ConfigMap cfg = ConfigMap::load(manifest.config_path);

  const std::string estimand = cfg.get_string("estimand", "counterfactual");
  if (estimand != "counterfactual" && estimand != "ite") {
    throw ConfigError("estimand must be counterfactual|ite");
  }
  SensitivityTarget target;
  target.t2 = parse_population(cfg.get_string("t2", "whole"));
  if (estimand == "counterfactual") {
    target.t1 = static_cast<int>(cfg.get_int("t1"));
    if (target.t1 != 0 && target.t1 != 1) throw ConfigError("t1 must be 0 or 1");
  }
  MethodConfig mcfg;
  mcfg.divergence = FDivergenceSpec::from_name(cfg.get_string("divergence", "kl"));
  mcfg.alpha = cfg.get_double("alpha", 0.1);
  const std::vector<double> rho_grid = cfg.get_double_list("rho_grid");
  SensitivityOptions opts;
  opts.seed = manifest.seed ? *manifest.seed
                            : static_cast<std::uint64_t>(cfg.get_int("seed", 1));
  opts.propensity_eps = cfg.get_double("propensity_eps", 0.01);
  opts.learners = learners_from(cfg);
  std::optional<std::pair<double, double>> budget;
  if (cfg.has("budget_split")) {
    const std::vector<double> split = cfg.get_double_list("budget_split");
    if (split.size() != 2) throw ConfigError("budget_split needs two entries");
    budget = std::make_pair(split[0], split[1]);
  }
  cfg.check_consumed();

  const CsvTable obs_table = read_csv_table(manifest.inputs[0]);
  if (!obs_table.y) throw DataError(manifest.inputs[0] + ": missing 'y' column");
  if (!obs_table.t) throw DataError(manifest.inputs[0] + ": missing 't' column");
  const ObservationalData data{obs_table.X, *obs_table.t, *obs_table.y};
  const CsvTable targets = read_csv_table(manifest.inputs[1]);
  if (targets.X.cols() != data.X.cols()) {
    throw DataError("observational/targets covariate dimensions differ");
  }

  std::vector<IntervalBlock> blocks;
  for (double rho : rho_grid) {
    MethodConfig cell_cfg = mcfg;
    cell_cfg.rho = RobustLevel{rho};
    std::vector<PredictionInterval> intervals;
    if (estimand == "ite") {
      intervals = ite_interval(data, targets.X, target.t2, cell_cfg, budget, opts)
                      .intervals;
    } else {
      intervals =
          counterfactual_interval(data, targets.X, target, cell_cfg, opts).intervals;
    }
    blocks.push_back({estimand, rho, std::move(intervals)});
  }
  write_intervals_csv(out_path(manifest, "intervals.csv"), blocks);
}

namespace {

nlohmann::ordered_json report_config_fingerprint(const nlohmann::ordered_json& report) {
  nlohmann::ordered_json fp = report;
  fp.erase("cells");
  fp.erase("shared_fit_sec");
  return fp;
}

}  // namespace

void cmd_experiment(const RunManifest& manifest) {
  check_inputs_exist(manifest, 0);
  ConfigMap cfg = ConfigMap::load(manifest.config_path);
  SimConfig sim = sim_config_from(cfg, manifest, /*with_experiment_keys=*/true);
  cfg.check_consumed();

  // resume: keep cells of a previous identical-config report
  std::set<std::pair<std::string, double>> done;
  nlohmann::ordered_json previous;
  const std::string json_path = out_path(manifest, "report.json");
  if (manifest.resume && fs::exists(json_path)) {
    previous = nlohmann::ordered_json::parse(read_file(json_path));
    ExperimentReport probe;
    probe.config = sim;
    const nlohmann::ordered_json current_fp = report_config_fingerprint(
        nlohmann::ordered_json::parse(probe.to_json()));
    if (report_config_fingerprint(previous) != current_fp) {
      throw ConfigError("resume: existing report.json was produced by a different config");
    }
    for (const auto& cell : previous["cells"]) {
      done.insert({cell["method"].get<std::string>(), cell["rho"].get<double>()});
    }
  }

  ExperimentReport report = run_experiment(sim, [&](Method m, double rho) {
    return done.count({method_name(m), rho}) > 0;
  });

  if (!done.empty()) {
    // merge cached cells back, preserving config order
    std::vector<CellStats> merged;
    for (Method m : sim.methods) {
      for (double rho : sim.rho_grid) {
        if (const CellStats* fresh = report.find(m, rho)) {
          merged.push_back(*fresh);
          continue;
        }
        for (const auto& cell : previous["cells"]) {
          if (cell["method"].get<std::string>() != method_name(m) ||
              cell["rho"].get<double>() != rho) {
            continue;
          }
          CellStats stats;
          stats.method = m;
          stats.rho = rho;
          stats.coverage_mean = cell["coverage"].get<double>();
          stats.coverage_half_width = cell["coverage_half_width"].get<double>();
          stats.length_mean = cell["mean_capped_length"].get<double>();
          stats.infinite_rate_mean = cell["infinite_rate"].get<double>();
          stats.runtime_sec = cell["runtime_sec"].get<double>();
          stats.run_coverage = cell["run_coverage"].get<std::vector<double>>();
          stats.run_length = cell["run_length"].get<std::vector<double>>();
          stats.run_infinite_rate =
              cell["run_infinite_rate"].get<std::vector<double>>();
          merged.push_back(std::move(stats));
          break;
        }
      }
    }
    report.cells = std::move(merged);
  }

  write_file_atomic(out_path(manifest, "report.csv"), report.to_csv());
  write_file_atomic(json_path, report.to_json());
}

}  // namespace wrcp
