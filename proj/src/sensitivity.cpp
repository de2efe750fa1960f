#include "wrcp/sensitivity.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "wrcp/errors.hpp"
#include "wrcp/rng.hpp"

namespace wrcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SensitivityTarget::Population parse_population(const std::string& name) {
  std::string n;
  for (char c : name) n.push_back(static_cast<char>(std::tolower(c)));
  if (n == "1" || n == "treated") return SensitivityTarget::Population::Treated;
  if (n == "0" || n == "control") return SensitivityTarget::Population::Control;
  if (n == "whole" || n == "all") return SensitivityTarget::Population::Whole;
  throw ConfigError("unknown target population '" + name + "' (expected 0|1|whole)");
}

std::string population_name(SensitivityTarget::Population p) {
  switch (p) {
    case SensitivityTarget::Population::Treated: return "1";
    case SensitivityTarget::Population::Control: return "0";
    case SensitivityTarget::Population::Whole: return "whole";
  }
  return "?";
}

double sensitivity_weight(const SensitivityTarget& target, double e_x,
                          const ArmRates& rates, double eps) {
  if (target.t1 != 0 && target.t1 != 1) {
    throw DataError("sensitivity_weight: t1 must be 0 or 1");
  }
  if (!(rates.p1 > 0.0) || !(rates.p1 < 1.0)) {
    throw DataError("sensitivity_weight: p1 outside (0,1)");
  }
  const double e = std::clamp(e_x, eps, 1.0 - eps);
  using Pop = SensitivityTarget::Population;
  if (target.t1 == 1) {
    switch (target.t2) {
      case Pop::Treated: return 1.0;
      case Pop::Control: return (1.0 - e) / e * rates.p1 / rates.p0;
      case Pop::Whole: return rates.p1 / e;
    }
  } else {
    switch (target.t2) {
      case Pop::Treated: return e / (1.0 - e) * rates.p0 / rates.p1;
      case Pop::Control: return 1.0;
      case Pop::Whole: return rates.p0 / (1.0 - e);
    }
  }
  throw DataError("sensitivity_weight: invalid target");
}

SensitivityResult counterfactual_interval(const ObservationalData& data,
                                          const Eigen::MatrixXd& test_X,
                                          const SensitivityTarget& target,
                                          const MethodConfig& cfg,
                                          const SensitivityOptions& opts) {
  const Eigen::Index n = data.size();
  if (n < 4) throw DataError("counterfactual_interval: too few rows to split");
  if (static_cast<Eigen::Index>(data.t.size()) != n ||
      data.y.size() != n) {
    throw DataError("counterfactual_interval: ragged observational data");
  }

  SensitivityResult result;
  result.plan = SplitPlan::make(n, test_X.rows(), opts.seed);
  const SplitPlan& plan = result.plan;

  // fold-0 rows of the counterfactual arm fit the arm's mean model
  std::vector<Eigen::Index> fit_arm;
  long n_treated = 0;
  for (Eigen::Index i : plan.tr0) {
    if (data.t[static_cast<std::size_t>(i)] == target.t1) fit_arm.push_back(i);
    n_treated += data.t[static_cast<std::size_t>(i)];
  }
  if (fit_arm.empty() || n_treated == 0 ||
      n_treated == static_cast<long>(plan.tr0.size())) {
    throw DataError("counterfactual_interval: empty treated or control fold");
  }

  Dataset arm_data{select_rows(data.X, fit_arm), Eigen::VectorXd(fit_arm.size())};
  for (std::size_t i = 0; i < fit_arm.size(); ++i) arm_data.y(i) = data.y(fit_arm[i]);
  const auto mu =
      opts.learners.fit_mean(arm_data, mix_seed(opts.seed, seed_tag::kMeanFit));
  const ScoreFunction score{ScoreFunction::Kind::AbsResidual, mu};

  result.rates.p1 = static_cast<double>(n_treated) / static_cast<double>(plan.tr0.size());
  result.rates.p0 = 1.0 - result.rates.p1;

  std::shared_ptr<const PropensityModel> ehat;
  if (opts.known_e) {
    ehat = std::make_shared<FunctionPropensity>(*opts.known_e, opts.propensity_eps);
  } else {
    const Eigen::MatrixXd X0 = select_rows(data.X, plan.tr0);
    std::vector<int> t0(plan.tr0.size());
    for (std::size_t i = 0; i < plan.tr0.size(); ++i) {
      t0[i] = data.t[static_cast<std::size_t>(plan.tr0[i])];
    }
    ehat = opts.learners.fit_propensity(X0, t0);
  }

  // calibration: fold-1 rows with T == t1, reweighted toward population t2
  std::vector<double> cal_scores, cal_weights;
  for (Eigen::Index i : plan.tr1) {
    if (data.t[static_cast<std::size_t>(i)] != target.t1) continue;
    cal_scores.push_back(apply_score(score, data.X.row(i), data.y(i)));
    cal_weights.push_back(sensitivity_weight(target, ehat->propensity(data.X.row(i)),
                                             result.rates, opts.propensity_eps));
  }
  if (cal_scores.empty()) {
    throw DataError("counterfactual_interval: no calibration rows in arm");
  }

  result.intervals.resize(static_cast<std::size_t>(test_X.rows()));
  for (Eigen::Index l = 0; l < test_X.rows(); ++l) {
    const double test_weight = sensitivity_weight(
        target, ehat->propensity(test_X.row(l)), result.rates, opts.propensity_eps);
    const double q = wrcp_threshold(cal_scores, cal_weights, test_weight, cfg);
    result.intervals[static_cast<std::size_t>(l)] =
        build_interval(test_X.row(l), *mu, q);
  }
  return result;
}

SensitivityResult ite_interval(const ObservationalData& data,
                               const Eigen::MatrixXd& test_X,
                               SensitivityTarget::Population t2,
                               const MethodConfig& cfg,
                               std::optional<std::pair<double, double>> budget_split,
                               const SensitivityOptions& opts) {
  const auto [alpha1, alpha2] =
      budget_split.value_or(std::make_pair(cfg.alpha / 2.0, cfg.alpha / 2.0));
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0) ||
      std::fabs(alpha1 + alpha2 - cfg.alpha) > 1e-12) {
    throw ConfigError("ite_interval: budget split must be positive and sum to alpha");
  }

  MethodConfig cfg1 = cfg;
  cfg1.alpha = alpha1;
  MethodConfig cfg0 = cfg;
  cfg0.alpha = alpha2;

  // same seed => same split plan for the two arms
  const SensitivityResult treated =
      counterfactual_interval(data, test_X, {1, t2}, cfg1, opts);
  const SensitivityResult control =
      counterfactual_interval(data, test_X, {0, t2}, cfg0, opts);

  SensitivityResult result;
  result.plan = treated.plan;
  result.rates = treated.rates;
  result.intervals.resize(treated.intervals.size());
  for (std::size_t i = 0; i < treated.intervals.size(); ++i) {
    const PredictionInterval& c1 = treated.intervals[i];
    const PredictionInterval& c0 = control.intervals[i];
    PredictionInterval pi;
    pi.is_infinite = c1.is_infinite || c0.is_infinite;
    pi.center = c1.center - c0.center;
    pi.threshold = c1.threshold + c0.threshold;  // half-length of the union bound
    if (pi.is_infinite) {
      pi.threshold = kInf;
      pi.lower = -kInf;
      pi.upper = kInf;
    } else {
      pi.lower = c1.lower - c0.upper;
      pi.upper = c1.upper - c0.lower;
    }
    result.intervals[i] = pi;
  }
  return result;
}

}  // namespace wrcp
