#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <vector>

#include "wrcp/conformal.hpp"
#include "wrcp/data.hpp"
#include "wrcp/estimators.hpp"

namespace wrcp {

/// The doubly-robust coverage-probability curve over candidate thresholds:
/// raw p-hat values (which need not be monotone or inside [0,1]) and their
/// suffix infima, whose first up-crossing of the target level defines the
/// monotonized threshold.
struct CoverageCurve {
  std::vector<double> thresholds;  // ascending; the last entry may be +inf
  std::vector<double> phat;
  std::vector<double> suffix_inf;
};

CoverageCurve make_coverage_curve(std::vector<double> thresholds,
                                  std::vector<double> phat_values);

/// The doubly-robust coverage estimate at threshold t:
///   sum_i w_i (1{S_i <= t} - m_i) / sum_i w_i + test_cdf_avg,
/// where m_i = m-hat(X_i; t) on the calibration fold and test_cdf_avg is the
/// average of m-hat over the test fold (excluding the point being covered).
/// May land outside [0,1]; that is intentional.
double phat(double t, const std::vector<double>& cal_scores,
            const std::vector<double>& cal_weights,
            const std::vector<double>& cal_cdf_at_t, double test_cdf_avg);

/// Smallest candidate threshold whose suffix infimum reaches target_level;
/// +inf when none does.
double monotonized_threshold(const CoverageCurve& curve, double target_level);

/// Per-fold precomputation that makes each test point's curve O(M + m):
/// per-threshold calibration sums are shared, only the left-out test point's
/// own CDF row changes between points.
class DwrcpFoldContext {
public:
  /// cal_*: calibration fold (scores, clipped weights, covariates);
  /// test_fold_X: the covariates of the test fold the intervals target.
  static DwrcpFoldContext build(const std::vector<double>& cal_scores,
                                const std::vector<double>& cal_weights,
                                const Eigen::MatrixXd& cal_X, const CdfModel& mhat,
                                const Eigen::MatrixXd& test_fold_X);

  /// Candidate thresholds: sorted calibration scores plus +inf.
  const std::vector<double>& candidates() const { return thresholds_; }

  /// The full coverage curve for test-fold member r (0-based within the fold).
  CoverageCurve curve_for(std::size_t r) const;

  /// The monotonized threshold for test-fold member r at target_level.
  double threshold_for(std::size_t r, double level) const;

private:
  std::vector<double> thresholds_;
  std::vector<double> cal_indicator_sum_;  // sum_i w_i 1{S_i <= t_j}
  std::vector<double> cal_cdf_sum_;        // sum_i w_i m(X_i; t_j)
  double weight_sum_ = 0.0;
  Eigen::MatrixXd test_cdf_;            // [r, j] = m(X_r; t_j)
  std::vector<double> test_cdf_colsum_;
};

struct DwrcpOptions {
  std::uint64_t seed = 0;
  Learners learners = Learners::defaults();
};

struct DwrcpResult {
  std::vector<PredictionInterval> intervals;  // aligned with test_X rows
  SplitPlan plan;
};

/// Cross-fitted doubly robust conformal prediction: for each fold k the mean
/// model, weight classifier, and conditional CDF are fit on the opposite
/// folds, and every test point in fold k receives the monotonized
/// doubly-robust threshold at level g^{-1}_{f,rho}(1 - alpha).
DwrcpResult run_dwrcp(const Dataset& train, const Eigen::MatrixXd& test_X,
                      const MethodConfig& cfg, const DwrcpOptions& opts = {});

}  // namespace wrcp
