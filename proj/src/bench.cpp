#include "wrcp/bench.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <nlohmann/json.hpp>

#include "wrcp/debiased.hpp"
#include "wrcp/errors.hpp"
#include "wrcp/mathutil.hpp"
#include "wrcp/parallel.hpp"
#include "wrcp/quantile.hpp"

namespace wrcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}
}  // namespace

Scenario parse_scenario(const std::string& name) {
  std::string n;
  for (char c : name) n.push_back(static_cast<char>(std::tolower(c)));
  if (n == "linear") return Scenario::Linear;
  if (n == "no_x_shift" || n == "noxshift") return Scenario::NoXShift;
  if (n == "no_cond_shift" || n == "nocondshift") return Scenario::NoCondShift;
  if (n == "nonlinear") return Scenario::Nonlinear;
  throw ConfigError("unknown scenario '" + name +
                    "' (expected linear|no_x_shift|no_cond_shift|nonlinear)");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Linear: return "linear";
    case Scenario::NoXShift: return "no_x_shift";
    case Scenario::NoCondShift: return "no_cond_shift";
    case Scenario::Nonlinear: return "nonlinear";
  }
  return "?";
}

TiltAnalysis analyze_tilt(const TiltSpec& tilt) {
  if (!(tilt.c_in > 0.0) || !(tilt.c_out > 0.0) || !(tilt.threshold > 0.0)) {
    throw DataError("analyze_tilt: tilt constants must be positive");
  }
  TiltAnalysis a;
  a.p_in = 2.0 * normal_cdf(tilt.threshold) - 1.0;
  a.p_out = 1.0 - a.p_in;
  a.mass = tilt.c_in * a.p_in + tilt.c_out * a.p_out;
  a.q_in = tilt.c_in * a.p_in / a.mass;
  a.q_out = tilt.c_out * a.p_out / a.mass;
  a.reference_kl =
      a.p_in * tilt.c_in * std::log(tilt.c_in) + a.p_out * tilt.c_out * std::log(tilt.c_out);
  a.renormalized_kl =
      a.q_in * std::log(tilt.c_in / a.mass) + a.q_out * std::log(tilt.c_out / a.mass);
  return a;
}

double sample_tilted_noise(const TiltSpec& tilt, Rng& rng) {
  const TiltAnalysis a = analyze_tilt(tilt);
  const double phi_hi = normal_cdf(tilt.threshold);
  const double phi_lo = 1.0 - phi_hi;
  if (rng.uniform() < a.q_in) {
    // truncated inside (-threshold, threshold)
    const double p = phi_lo + rng.uniform_open() * (phi_hi - phi_lo);
    return normal_quantile(p);
  }
  // truncated outside; the two tails carry equal mass
  const double side = rng.uniform() < 0.5 ? -1.0 : 1.0;
  const double p = phi_hi + rng.uniform_open() * (1.0 - phi_hi);
  return side * normal_quantile(p);
}

SimConfig SimConfig::for_scenario(Scenario s) {
  SimConfig cfg;
  cfg.scenario = s;
  switch (s) {
    case Scenario::Linear:
      cfg.eta = 0.5;
      break;
    case Scenario::NoXShift:
      cfg.eta = 0.0;
      break;
    case Scenario::NoCondShift:
      cfg.eta = 0.1;
      cfg.tilt = TiltSpec{1.0, 1.0, 1.86};
      break;
    case Scenario::Nonlinear:
      cfg.eta = 0.1;
      break;
  }
  return cfg;
}

double scenario_mean(const SimConfig& cfg, const Eigen::VectorXd& x) {
  if (cfg.scenario == Scenario::Nonlinear) {
    const double x0 = x.size() > 0 ? x(0) : 0.0;
    const double x1 = x.size() > 1 ? x(1) : 0.0;
    return 1.0 / ((1.0 + std::exp(x0)) * (1.0 + std::exp(-x1)));
  }
  const int s = std::min<int>(cfg.sparsity, static_cast<int>(x.size()));
  double mean = 0.0;
  for (int j = 0; j < s; ++j) mean += cfg.coef * x(j);
  return mean;
}

Dataset simulate_source(const SimConfig& cfg, Rng& rng) {
  Dataset out;
  out.X.resize(cfg.n_train, cfg.d);
  out.y.resize(cfg.n_train);
  for (Eigen::Index i = 0; i < cfg.n_train; ++i) {
    for (int j = 0; j < cfg.d; ++j) out.X(i, j) = rng.normal();
    out.y(i) = scenario_mean(cfg, out.X.row(i)) + rng.normal();
  }
  return out;
}

Dataset simulate_target(const SimConfig& cfg, Rng& rng) {
  Eigen::VectorXd shift = Eigen::VectorXd::Zero(cfg.d);
  if (cfg.scenario != Scenario::NoXShift && cfg.d >= 1) {
    shift(0) = cfg.eta;
    if (cfg.d >= 2) shift(1) = -cfg.eta;
  }
  Dataset out;
  out.X.resize(cfg.n_test, cfg.d);
  out.y.resize(cfg.n_test);
  for (Eigen::Index i = 0; i < cfg.n_test; ++i) {
    for (int j = 0; j < cfg.d; ++j) out.X(i, j) = shift(j) + rng.normal();
    const double noise = cfg.scenario == Scenario::NoCondShift
                             ? rng.normal()
                             : sample_tilted_noise(cfg.tilt, rng);
    out.y(i) = scenario_mean(cfg, out.X.row(i)) + noise;
  }
  return out;
}

MetricsRow metrics(const std::vector<PredictionInterval>& intervals,
                   const std::vector<double>& truths, double cap) {
  if (intervals.size() != truths.size() || intervals.empty()) {
    throw DataError("metrics: empty or mismatched inputs");
  }
  MetricsRow row;
  double covered = 0.0;
  double length = 0.0;
  double infinite = 0.0;
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    if (intervals[i].covers(truths[i])) covered += 1.0;
    if (intervals[i].is_infinite) {
      infinite += 1.0;
      length += cap;
    } else {
      length += std::min(intervals[i].length(), cap);
    }
  }
  const auto n = static_cast<double>(intervals.size());
  row.coverage = covered / n;
  row.mean_capped_length = length / n;
  row.infinite_rate = infinite / n;
  return row;
}

std::uint64_t experiment_run_seed(const SimConfig& cfg, int run) {
  return mix_seed(mix_seed(cfg.seed, seed_tag::kRun), static_cast<std::uint64_t>(run));
}

namespace {

struct Cell {
  Method method;
  double rho;
};

struct RunOutput {
  std::vector<MetricsRow> cell_metrics;
  std::vector<double> cell_seconds;
  double fit_seconds = 0.0;
};

RunOutput run_one(const SimConfig& cfg, const std::vector<Cell>& cells, int run) {
  const std::uint64_t run_seed = experiment_run_seed(cfg, run);
  Rng rng_src(mix_seed(run_seed, seed_tag::kSourceData));
  const Dataset train = simulate_source(cfg, rng_src);
  Rng rng_tgt(mix_seed(run_seed, seed_tag::kTargetData));
  const Dataset target = simulate_target(cfg, rng_tgt);

  const auto t0 = std::chrono::steady_clock::now();
  const Learners learners = Learners::defaults();
  const SplitPlan plan = SplitPlan::make(cfg.n_train, cfg.n_test, run_seed);

  const auto mu =
      learners.fit_mean(train.rows(plan.tr0), mix_seed(run_seed, seed_tag::kMeanFit));
  const ScoreFunction score{ScoreFunction::Kind::AbsResidual, mu};

  const Eigen::MatrixXd cal_X = select_rows(train.X, plan.tr1);
  std::vector<double> cal_scores(plan.tr1.size());
  for (std::size_t i = 0; i < plan.tr1.size(); ++i) {
    cal_scores[i] = apply_score(score, cal_X.row(static_cast<Eigen::Index>(i)),
                                train.y(plan.tr1[i]));
  }

  // evaluation happens on test fold 1; fold 0 is the weight-estimation fold
  const Eigen::MatrixXd eval_X = select_rows(target.X, plan.test1);
  std::vector<double> truths(plan.test1.size());
  for (std::size_t i = 0; i < plan.test1.size(); ++i) truths[i] = target.y(plan.test1[i]);
  const std::size_t n_eval = truths.size();

  const bool need_ratio = std::any_of(cells.begin(), cells.end(), [](const Cell& c) {
    return c.method != Method::CP;
  });
  const bool need_dwrcp = std::any_of(cells.begin(), cells.end(), [](const Cell& c) {
    return c.method == Method::DWRCP;
  });

  std::shared_ptr<const RatioModel> ratio;
  std::vector<double> cal_weights(plan.tr1.size(), 1.0);
  std::vector<double> eval_weights(n_eval, 1.0);
  double rho_inflation = 0.0;  // max(0, KL(Q_X||P_X) plug-in estimate)
  if (need_ratio) {
    ratio = learners.fit_ratio(select_rows(train.X, plan.tr0),
                               select_rows(target.X, plan.test0));
    for (std::size_t i = 0; i < plan.tr1.size(); ++i) {
      cal_weights[i] = ratio->ratio(cal_X.row(static_cast<Eigen::Index>(i)));
    }
    for (std::size_t i = 0; i < n_eval; ++i) {
      eval_weights[i] = ratio->ratio(eval_X.row(static_cast<Eigen::Index>(i)));
    }
    rho_inflation =
        rho_rcp_adjust(RobustLevel{0.0}, *ratio, select_rows(target.X, plan.test0)).rho;
  }

  std::unique_ptr<DwrcpFoldContext> dw;
  if (need_dwrcp) {
    const Dataset fit_fold = train.rows(plan.tr0);
    std::vector<double> fit_scores(plan.tr0.size());
    for (std::size_t i = 0; i < plan.tr0.size(); ++i) {
      fit_scores[i] = apply_score(score, fit_fold.X.row(static_cast<Eigen::Index>(i)),
                                  fit_fold.y(static_cast<Eigen::Index>(i)));
    }
    const auto mhat = learners.fit_cdf(fit_fold.X, fit_scores);
    dw = std::make_unique<DwrcpFoldContext>(
        DwrcpFoldContext::build(cal_scores, cal_weights, cal_X, *mhat, eval_X));
  }

  const std::vector<double> uniform_weights(plan.tr1.size(), 1.0);

  RunOutput out;
  out.fit_seconds = seconds_since(t0);
  out.cell_metrics.resize(cells.size());
  out.cell_seconds.resize(cells.size());

  std::vector<PredictionInterval> intervals(n_eval);
  for (std::size_t c = 0; c < cells.size(); ++c) {
    const auto t1 = std::chrono::steady_clock::now();
    const Cell& cell = cells[c];
    MethodConfig mcfg;
    mcfg.method = cell.method;
    mcfg.divergence = cfg.divergence;
    mcfg.alpha = cfg.alpha;

    switch (cell.method) {
      case Method::CP: {
        mcfg.rho = RobustLevel{0.0};
        const double q = wrcp_threshold(cal_scores, uniform_weights, 1.0, mcfg);
        for (std::size_t l = 0; l < n_eval; ++l) {
          intervals[l] = build_interval(eval_X.row(static_cast<Eigen::Index>(l)), *mu, q);
        }
        break;
      }
      case Method::RCP: {
        mcfg.rho = RobustLevel{cell.rho + rho_inflation};
        const double q = wrcp_threshold(cal_scores, uniform_weights, 1.0, mcfg);
        for (std::size_t l = 0; l < n_eval; ++l) {
          intervals[l] = build_interval(eval_X.row(static_cast<Eigen::Index>(l)), *mu, q);
        }
        break;
      }
      case Method::WCP:
      case Method::WRCP: {
        mcfg.rho = RobustLevel{cell.method == Method::WCP ? 0.0 : cell.rho};
        for (std::size_t l = 0; l < n_eval; ++l) {
          const double q =
              wrcp_threshold(cal_scores, cal_weights, eval_weights[l], mcfg);
          intervals[l] = build_interval(eval_X.row(static_cast<Eigen::Index>(l)), *mu, q);
        }
        break;
      }
      case Method::DWRCP: {
        const double level =
            g_inverse(cfg.divergence, RobustLevel{cell.rho}, 1.0 - cfg.alpha);
        for (std::size_t l = 0; l < n_eval; ++l) {
          const double q = dw->threshold_for(l, level);
          intervals[l] = build_interval(eval_X.row(static_cast<Eigen::Index>(l)), *mu, q);
        }
        break;
      }
    }
    out.cell_metrics[c] = metrics(intervals, truths, cfg.length_cap);
    out.cell_seconds[c] = seconds_since(t1);
  }
  return out;
}

}  // namespace

ExperimentReport run_experiment(const SimConfig& cfg,
                                const std::function<bool(Method, double)>& skip) {
  if (cfg.n_runs < 1) throw ConfigError("run_experiment: n_runs must be >= 1");
  if (cfg.rho_grid.empty()) throw ConfigError("run_experiment: empty rho grid");
  if (!(cfg.alpha > 0.0) || !(cfg.alpha < 1.0)) {
    throw ConfigError("run_experiment: alpha outside (0,1)");
  }
  if (cfg.n_train < 8 || cfg.n_test < 8) {
    throw ConfigError("run_experiment: n_train and n_test must be >= 8");
  }
  for (double rho : cfg.rho_grid) {
    if (rho < 0.0) throw ConfigError("run_experiment: negative rho");
  }

  std::vector<Cell> cells;
  for (Method m : cfg.methods) {
    for (double rho : cfg.rho_grid) {
      if (skip && skip(m, rho)) continue;
      cells.push_back({m, rho});
    }
  }

  std::vector<RunOutput> outputs;
  if (!cells.empty()) {
    outputs.resize(static_cast<std::size_t>(cfg.n_runs));
    parallel_for(static_cast<std::size_t>(cfg.n_runs), resolve_jobs(cfg.jobs),
                 [&](std::size_t r) {
                   outputs[r] = run_one(cfg, cells, static_cast<int>(r));
                 });
  }

  ExperimentReport report;
  report.config = cfg;
  report.cells.resize(cells.size());
  for (std::size_t c = 0; c < cells.size(); ++c) {
    CellStats& stats = report.cells[c];
    stats.method = cells[c].method;
    stats.rho = cells[c].rho;
    for (const RunOutput& out : outputs) {
      stats.run_coverage.push_back(out.cell_metrics[c].coverage);
      stats.run_length.push_back(out.cell_metrics[c].mean_capped_length);
      stats.run_infinite_rate.push_back(out.cell_metrics[c].infinite_rate);
      stats.runtime_sec += out.cell_seconds[c];
    }
    const auto n = static_cast<double>(stats.run_coverage.size());
    auto mean = [n](const std::vector<double>& v) {
      return std::accumulate(v.begin(), v.end(), 0.0) / n;
    };
    stats.coverage_mean = mean(stats.run_coverage);
    stats.length_mean = mean(stats.run_length);
    stats.infinite_rate_mean = mean(stats.run_infinite_rate);
    if (n > 1) {
      double ss = 0.0;
      for (double v : stats.run_coverage) {
        ss += (v - stats.coverage_mean) * (v - stats.coverage_mean);
      }
      stats.coverage_half_width = 1.96 * std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
  }
  for (const RunOutput& out : outputs) report.shared_fit_sec += out.fit_seconds;
  return report;
}

const CellStats* ExperimentReport::find(Method m, double rho) const {
  for (const CellStats& c : cells) {
    if (c.method == m && std::fabs(c.rho - rho) < 1e-12) return &c;
  }
  return nullptr;
}

std::string ExperimentReport::to_csv() const {
  std::string out =
      "method,rho,coverage,coverage_half_width,mean_capped_length,"
      "infinite_rate,runtime_sec\n";
  for (const CellStats& c : cells) {
    out += method_name(c.method);
    out += ',';
    out += fmt_double(c.rho);
    out += ',';
    out += fmt_double(c.coverage_mean);
    out += ',';
    out += fmt_double(c.coverage_half_width);
    out += ',';
    out += fmt_double(c.length_mean);
    out += ',';
    out += fmt_double(c.infinite_rate_mean);
    out += ',';
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", c.runtime_sec);
    out += buf;
    out += '\n';
  }
  return out;
}

std::string ExperimentReport::to_json() const {
  nlohmann::ordered_json j;
  j["scenario"] = scenario_name(config.scenario);
  j["divergence"] = config.divergence.name;
  j["alpha"] = config.alpha;
  j["eta"] = config.eta;
  j["d"] = config.d;
  j["n_train"] = config.n_train;
  j["n_test"] = config.n_test;
  j["n_runs"] = config.n_runs;
  j["seed"] = config.seed;
  j["length_cap"] = config.length_cap;
  j["tilt"] = {{"c_in", config.tilt.c_in},
               {"c_out", config.tilt.c_out},
               {"threshold", config.tilt.threshold}};
  j["shared_fit_sec"] = shared_fit_sec;
  j["cells"] = nlohmann::ordered_json::array();
  for (const CellStats& c : cells) {
    nlohmann::ordered_json cell;
    cell["method"] = method_name(c.method);
    cell["rho"] = c.rho;
    cell["coverage"] = c.coverage_mean;
    cell["coverage_half_width"] = c.coverage_half_width;
    cell["mean_capped_length"] = c.length_mean;
    cell["infinite_rate"] = c.infinite_rate_mean;
    cell["runtime_sec"] = c.runtime_sec;
    cell["run_coverage"] = c.run_coverage;
    cell["run_length"] = c.run_length;
    cell["run_infinite_rate"] = c.run_infinite_rate;
    j["cells"].push_back(std::move(cell));
  }
  return j.dump(2);
}

}  // namespace wrcp
