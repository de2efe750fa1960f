#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "wrcp/data.hpp"
#include "wrcp/divergence.hpp"
#include "wrcp/estimators.hpp"

namespace wrcp {

/// Seeded two-fold splits of the training and test index sets. Folds are
/// disjoint, cover everything, and differ in size by at most one; an odd
/// count puts the extra index in fold 0 (the fitting fold).
struct SplitPlan {
  std::vector<Eigen::Index> tr0, tr1;
  std::vector<Eigen::Index> test0, test1;
  std::uint64_t seed = 0;

  static SplitPlan make(Eigen::Index n_train, Eigen::Index n_test, std::uint64_t seed);
};

/// A score threshold together with its inversion into an outcome set for the
/// absolute-residual score: [center - threshold, center + threshold].
struct PredictionInterval {
  double threshold = 0.0;  // +inf means the whole line
  double center = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool is_infinite = false;
  int fold = -1;  // test fold the interval was built in; -1 when w was known

  bool covers(double y) const { return lower <= y && y <= upper; }
  double length() const { return upper - lower; }
};

enum class Method { CP, WCP, RCP, WRCP, DWRCP };

std::string method_name(Method m);
Method parse_method(const std::string& name);

/// CP is WRCP with w == 1 and rho == 0; WCP keeps rho == 0 with estimated
/// weights; RCP keeps w == 1 with its own (inflated) rho.
struct MethodConfig {
  Method method = Method::WRCP;
  FDivergenceSpec divergence = FDivergenceSpec::kl();
  RobustLevel rho;
  double alpha = 0.1;
};

/// The worst-case-adjusted weighted-quantile threshold: the weighted quantile
/// of the calibration scores (plus the test point's infinity atom) at level
/// g^{-1}_{f,rho}(1 - alpha).
double wrcp_threshold(const std::vector<double>& cal_scores,
                      const std::vector<double>& cal_raw_weights,
                      double test_raw_weight, const MethodConfig& cfg);

/// Inverts the absolute-residual score at threshold q into the outcome
/// interval [mu(x) - q, mu(x) + q].
PredictionInterval build_interval(const Eigen::VectorXd& x, const MeanModel& model,
                                  double threshold);

using WeightFn = std::function<double(const Eigen::VectorXd&)>;

struct WrcpOptions {
  std::uint64_t seed = 0;
  Learners learners = Learners::defaults();
  /// When set, the covariate likelihood ratio is treated as known and the
  /// test-fold classifier scheme is skipped entirely.
  std::optional<WeightFn> known_w;
  /// Small-m fallback: estimate the weight for test point j from all other
  /// test points instead of the opposite fold (one classifier per point).
  bool loo_weights = false;
};

struct WrcpResult {
  std::vector<PredictionInterval> intervals;  // aligned with test_X rows
  SplitPlan plan;
  std::vector<double> cal_scores;  // scores of fold tr1, in tr1 order
};

/// Split conformal prediction under an estimated covariate shift and a
/// worst-case rho-bounded conditional shift. With known_w the intervals use
/// the supplied ratio directly; otherwise each test fold's weights come from
/// a source-vs-target classifier trained on the opposite test fold.
WrcpResult run_wrcp(const Dataset& train, const Eigen::MatrixXd& test_X,
                    const MethodConfig& cfg, const WrcpOptions& opts = {});

/// The robust level for the joint-shift baseline: rho plus a Monte Carlo
/// plug-in estimate of KL(Q_X || P_X) (mean log of the normalized ratio over
/// a target sample), floored at rho.
RobustLevel rho_rcp_adjust(RobustLevel rho, const RatioModel& ratio_model,
                           const Eigen::MatrixXd& target_sample);

}  // namespace wrcp
