#include "wrcp/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wrcp/errors.hpp"
#include "wrcp/quantile.hpp"
#include "wrcp/rng.hpp"

namespace wrcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::pair<std::vector<Eigen::Index>, std::vector<Eigen::Index>> split_half(
    Eigen::Index n, std::uint64_t seed) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  const std::size_t n0 = (perm.size() + 1) / 2;  // extra index goes to fold 0
  std::vector<Eigen::Index> f0(perm.begin(), perm.begin() + n0);
  std::vector<Eigen::Index> f1(perm.begin() + n0, perm.end());
  return {std::move(f0), std::move(f1)};
}

}  // namespace

SplitPlan SplitPlan::make(Eigen::Index n_train, Eigen::Index n_test,
                          std::uint64_t seed) {
  SplitPlan plan;
  plan.seed = seed;
  std::tie(plan.tr0, plan.tr1) = split_half(n_train, mix_seed(seed, seed_tag::kTrainSplit));
  std::tie(plan.test0, plan.test1) =
      split_half(n_test, mix_seed(seed, seed_tag::kTestSplit));
  return plan;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::CP: return "cp";
    case Method::WCP: return "wcp";
    case Method::RCP: return "rcp";
    case Method::WRCP: return "wrcp";
    case Method::DWRCP: return "dwrcp";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string n;
  for (char c : name) n.push_back(static_cast<char>(std::tolower(c)));
  if (n == "cp") return Method::CP;
  if (n == "wcp") return Method::WCP;
  if (n == "rcp") return Method::RCP;
  if (n == "wrcp") return Method::WRCP;
  if (n == "dwrcp" || n == "d-wrcp") return Method::DWRCP;
  throw ConfigError("unknown method '" + name + "' (expected cp|wcp|rcp|wrcp|dwrcp)");
}

double wrcp_threshold(const std::vector<double>& cal_scores,
                      const std::vector<double>& cal_raw_weights,
                      double test_raw_weight, const MethodConfig& cfg) {
  if (cal_scores.size() != cal_raw_weights.size()) {
    throw DataError("wrcp_threshold: scores/weights length mismatch");
  }
  const double level = g_inverse(cfg.divergence, cfg.rho, 1.0 - cfg.alpha);
  ScoreSet set = normalize_weights(cal_raw_weights, test_raw_weight);
  set.scores = cal_scores;
  return weighted_quantile(level, set);
}

PredictionInterval build_interval(const Eigen::VectorXd& x, const MeanModel& model,
                                  double threshold) {
  if (threshold < 0.0) throw DataError("build_interval: negative threshold");
  PredictionInterval pi;
  pi.threshold = threshold;
  pi.center = model.predict(x);
  pi.is_infinite = std::isinf(threshold);
  if (pi.is_infinite) {
    pi.lower = -kInf;
    pi.upper = kInf;
  } else {
    pi.lower = pi.center - threshold;
    pi.upper = pi.center + threshold;
  }
  return pi;
}

WrcpResult run_wrcp(const Dataset& train, const Eigen::MatrixXd& test_X,
                    const MethodConfig& cfg, const WrcpOptions& opts) {
  const Eigen::Index n = train.size();
  const Eigen::Index m = test_X.rows();
  if (n < 4) throw DataError("run_wrcp: training set too small to split");
  if (m == 0) throw DataError("run_wrcp: no test points");

  WrcpResult result;
  result.plan = SplitPlan::make(n, m, opts.seed);
  const SplitPlan& plan = result.plan;

  const auto mu =
      opts.learners.fit_mean(train.rows(plan.tr0), mix_seed(opts.seed, seed_tag::kMeanFit));
  const ScoreFunction score{ScoreFunction::Kind::AbsResidual, mu};

  result.cal_scores.reserve(plan.tr1.size());
  for (Eigen::Index i : plan.tr1) {
    result.cal_scores.push_back(apply_score(score, train.X.row(i), train.y(i)));
  }

  result.intervals.resize(static_cast<std::size_t>(m));

  if (opts.known_w) {
    const WeightFn& w = *opts.known_w;
    std::vector<double> cal_weights(plan.tr1.size());
    for (std::size_t i = 0; i < plan.tr1.size(); ++i) {
      cal_weights[i] = w(train.X.row(plan.tr1[i]));
    }
    for (Eigen::Index l = 0; l < m; ++l) {
      const double q =
          wrcp_threshold(result.cal_scores, cal_weights, w(test_X.row(l)), cfg);
      result.intervals[static_cast<std::size_t>(l)] =
          build_interval(test_X.row(l), *mu, q);
    }
    return result;
  }

  const Eigen::MatrixXd source_X = select_rows(train.X, plan.tr0);

  if (opts.loo_weights) {
    // Remark-3 fallback: one classifier per test point, trained on all other
    // test points.
    if (m < 2) throw DataError("run_wrcp: leave-one-out weights need >= 2 test points");
    for (Eigen::Index l = 0; l < m; ++l) {
      Eigen::MatrixXd others(m - 1, test_X.cols());
      Eigen::Index r = 0;
      for (Eigen::Index j = 0; j < m; ++j) {
        if (j != l) others.row(r++) = test_X.row(j);
      }
      const auto ratio = opts.learners.fit_ratio(source_X, others);
      std::vector<double> cal_weights(plan.tr1.size());
      for (std::size_t i = 0; i < plan.tr1.size(); ++i) {
        cal_weights[i] = ratio->ratio(train.X.row(plan.tr1[i]));
      }
      const double q = wrcp_threshold(result.cal_scores, cal_weights,
                                      ratio->ratio(test_X.row(l)), cfg);
      result.intervals[static_cast<std::size_t>(l)] =
          build_interval(test_X.row(l), *mu, q);
    }
    return result;
  }

  // Cross-fold weight estimation: fold k's weights come from a classifier
  // trained against the opposite test fold.
  for (int k = 0; k < 2; ++k) {
    const auto& own = (k == 0) ? plan.test0 : plan.test1;
    const auto& other = (k == 0) ? plan.test1 : plan.test0;
    if (own.empty()) continue;
    if (other.empty()) throw DataError("run_wrcp: empty weight-estimation fold");

    const auto ratio = opts.learners.fit_ratio(source_X, select_rows(test_X, other));
    std::vector<double> cal_weights(plan.tr1.size());
    for (std::size_t i = 0; i < plan.tr1.size(); ++i) {
      cal_weights[i] = ratio->ratio(train.X.row(plan.tr1[i]));
    }
    for (Eigen::Index l : own) {
      const double q = wrcp_threshold(result.cal_scores, cal_weights,
                                      ratio->ratio(test_X.row(l)), cfg);
      PredictionInterval pi = build_interval(test_X.row(l), *mu, q);
      pi.fold = k;
      result.intervals[static_cast<std::size_t>(l)] = pi;
    }
  }
  return result;
}

RobustLevel rho_rcp_adjust(RobustLevel rho, const RatioModel& ratio_model,
                           const Eigen::MatrixXd& target_sample) {
  if (target_sample.rows() == 0) {
    throw DataError("rho_rcp_adjust: empty target sample");
  }
  const double norm = ratio_model.mean_source_ratio();
  if (!(norm > 0.0)) throw NumericalError("rho_rcp_adjust: nonpositive normalization");
  double mean_log = 0.0;
  for (Eigen::Index i = 0; i < target_sample.rows(); ++i) {
    mean_log += std::log(ratio_model.ratio(target_sample.row(i)) / norm);
  }
  mean_log /= static_cast<double>(target_sample.rows());
  return RobustLevel{rho.rho + std::max(0.0, mean_log)};
}

}  // namespace wrcp
