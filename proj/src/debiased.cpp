#include "wrcp/debiased.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wrcp/errors.hpp"
#include "wrcp/rng.hpp"

namespace wrcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLevelTol = 1e-12;  // roundoff guard on level comparisons
}  // namespace

CoverageCurve make_coverage_curve(std::vector<double> thresholds,
                                  std::vector<double> phat_values) {
  if (thresholds.size() != phat_values.size() || thresholds.empty()) {
    throw DataError("make_coverage_curve: empty or mismatched inputs");
  }
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw DataError("make_coverage_curve: thresholds not ascending");
  }
  CoverageCurve curve;
  curve.thresholds = std::move(thresholds);
  curve.phat = std::move(phat_values);
  curve.suffix_inf.resize(curve.phat.size());
  double running = kInf;
  for (std::size_t j = curve.phat.size(); j-- > 0;) {
    running = std::min(running, curve.phat[j]);
    curve.suffix_inf[j] = running;
  }
  return curve;
}

double phat(double t, const std::vector<double>& cal_scores,
            const std::vector<double>& cal_weights,
            const std::vector<double>& cal_cdf_at_t, double test_cdf_avg) {
  const std::size_t n = cal_scores.size();
  if (n == 0) throw DataError("phat: empty calibration fold");
  if (cal_weights.size() != n || cal_cdf_at_t.size() != n) {
    throw DataError("phat: input length mismatch");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double indicator = cal_scores[i] <= t ? 1.0 : 0.0;
    num += cal_weights[i] * (indicator - cal_cdf_at_t[i]);
    den += cal_weights[i];
  }
  if (!(den > 0.0)) throw DataError("phat: nonpositive weight sum");
  return num / den + test_cdf_avg;
}

double monotonized_threshold(const CoverageCurve& curve, double target_level) {
  for (std::size_t j = 0; j < curve.suffix_inf.size(); ++j) {
    if (curve.suffix_inf[j] + kLevelTol >= target_level) return curve.thresholds[j];
  }
  return kInf;
}

DwrcpFoldContext DwrcpFoldContext::build(const std::vector<double>& cal_scores,
                                         const std::vector<double>& cal_weights,
                                         const Eigen::MatrixXd& cal_X,
                                         const CdfModel& mhat,
                                         const Eigen::MatrixXd& test_fold_X) {
  const std::size_t n = cal_scores.size();
  if (n == 0) throw DataError("dwrcp: empty calibration fold");
  if (cal_weights.size() != n || cal_X.rows() != static_cast<Eigen::Index>(n)) {
    throw DataError("dwrcp: calibration input length mismatch");
  }

  DwrcpFoldContext ctx;
  ctx.thresholds_ = cal_scores;
  std::sort(ctx.thresholds_.begin(), ctx.thresholds_.end());
  ctx.thresholds_.push_back(kInf);
  const std::size_t M = ctx.thresholds_.size();

  // sum_i w_i 1{S_i <= t_j}: sort scores jointly with weights, prefix-scan.
  {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return cal_scores[a] < cal_scores[b];
    });
    ctx.cal_indicator_sum_.assign(M, 0.0);
    double cum = 0.0;
    std::size_t pos = 0;
    for (std::size_t j = 0; j < M; ++j) {
      while (pos < n && cal_scores[order[pos]] <= ctx.thresholds_[j]) {
        cum += cal_weights[order[pos]];
        ++pos;
      }
      ctx.cal_indicator_sum_[j] = cum;
    }
    ctx.weight_sum_ = std::accumulate(cal_weights.begin(), cal_weights.end(), 0.0);
    if (!(ctx.weight_sum_ > 0.0)) throw DataError("dwrcp: nonpositive weight sum");
  }

  ctx.cal_cdf_sum_.assign(M, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> row =
        mhat.cdf_curve(cal_X.row(static_cast<Eigen::Index>(i)), ctx.thresholds_);
    for (std::size_t j = 0; j < M; ++j) {
      ctx.cal_cdf_sum_[j] += cal_weights[i] * row[j];
    }
  }

  const std::size_t mt = static_cast<std::size_t>(test_fold_X.rows());
  if (mt < 2) throw DataError("dwrcp: test fold needs >= 2 points");
  ctx.test_cdf_.resize(static_cast<Eigen::Index>(mt), static_cast<Eigen::Index>(M));
  ctx.test_cdf_colsum_.assign(M, 0.0);
  for (std::size_t r = 0; r < mt; ++r) {
    const std::vector<double> row =
        mhat.cdf_curve(test_fold_X.row(static_cast<Eigen::Index>(r)), ctx.thresholds_);
    for (std::size_t j = 0; j < M; ++j) {
      ctx.test_cdf_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) = row[j];
      ctx.test_cdf_colsum_[j] += row[j];
    }
  }
  return ctx;
}

CoverageCurve DwrcpFoldContext::curve_for(std::size_t r) const {
  const std::size_t M = thresholds_.size();
  const auto mt = static_cast<double>(test_cdf_.rows());
  std::vector<double> values(M);
  for (std::size_t j = 0; j < M; ++j) {
    const double avg =
        (test_cdf_colsum_[j] -
         test_cdf_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j))) /
        (mt - 1.0);
    values[j] = (cal_indicator_sum_[j] - cal_cdf_sum_[j]) / weight_sum_ + avg;
  }
  return make_coverage_curve(thresholds_, std::move(values));
}

double DwrcpFoldContext::threshold_for(std::size_t r, double level) const {
  return monotonized_threshold(curve_for(r), level);
}

DwrcpResult run_dwrcp(const Dataset& train, const Eigen::MatrixXd& test_X,
                      const MethodConfig& cfg, const DwrcpOptions& opts) {
  const Eigen::Index n = train.size();
  const Eigen::Index m = test_X.rows();
  if (n < 4) throw DataError("run_dwrcp: training set too small to split");
  if (m < 4) throw DataError("run_dwrcp: need at least 4 test points");

  DwrcpResult result;
  result.plan = SplitPlan::make(n, m, opts.seed);
  const SplitPlan& plan = result.plan;
  result.intervals.resize(static_cast<std::size_t>(m));

  const double level = g_inverse(cfg.divergence, cfg.rho, 1.0 - cfg.alpha);

  for (int k = 0; k < 2; ++k) {
    const auto& cal_idx = (k == 0) ? plan.tr0 : plan.tr1;
    const auto& fit_idx = (k == 0) ? plan.tr1 : plan.tr0;
    const auto& own_test = (k == 0) ? plan.test0 : plan.test1;
    const auto& other_test = (k == 0) ? plan.test1 : plan.test0;
    if (own_test.empty()) continue;
    if (cal_idx.empty() || fit_idx.empty() || other_test.empty()) {
      throw DataError("run_dwrcp: degenerate fold");
    }

    // Everything is fit on the opposite folds: the mean model and the
    // conditional CDF on the opposite training fold, the weight classifier
    // against the opposite test fold.
    const Dataset fit_fold = train.rows(fit_idx);
    const auto mu = opts.learners.fit_mean(
        fit_fold,
        mix_seed(opts.seed, k == 1 ? seed_tag::kMeanFit : seed_tag::kMeanFitAlt));
    const ScoreFunction score{ScoreFunction::Kind::AbsResidual, mu};

    const auto ratio =
        opts.learners.fit_ratio(fit_fold.X, select_rows(test_X, other_test));

    std::vector<double> fit_scores(fit_idx.size());
    for (std::size_t i = 0; i < fit_idx.size(); ++i) {
      fit_scores[i] = apply_score(score, fit_fold.X.row(i), fit_fold.y(i));
    }
    const auto mhat = opts.learners.fit_cdf(fit_fold.X, fit_scores);

    std::vector<double> cal_scores(cal_idx.size());
    std::vector<double> cal_weights(cal_idx.size());
    const Eigen::MatrixXd cal_X = select_rows(train.X, cal_idx);
    for (std::size_t i = 0; i < cal_idx.size(); ++i) {
      cal_scores[i] = apply_score(score, cal_X.row(i), train.y(cal_idx[i]));
      cal_weights[i] = ratio->ratio(cal_X.row(i));
    }

    const Eigen::MatrixXd own_X = select_rows(test_X, own_test);
    const DwrcpFoldContext ctx =
        DwrcpFoldContext::build(cal_scores, cal_weights, cal_X, *mhat, own_X);

    for (std::size_t r = 0; r < own_test.size(); ++r) {
      const double q = ctx.threshold_for(r, level);
      PredictionInterval pi = build_interval(own_X.row(r), *mu, q);
      pi.fold = k;
      result.intervals[static_cast<std::size_t>(own_test[r])] = pi;
    }
  }
  return result;
}

}  // namespace wrcp
