#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "wrcp/conformal.hpp"
#include "wrcp/data.hpp"

namespace wrcp {

/// Which potential outcome is inferred (t1) and which population the interval
/// targets (t2): the treated arm, the control arm, or everyone.
struct SensitivityTarget {
  enum class Population { Treated, Control, Whole };
  int t1 = 1;  // counterfactual arm, 0 or 1
  Population t2 = Population::Whole;
};

SensitivityTarget::Population parse_population(const std::string& name);
std::string population_name(SensitivityTarget::Population p);

/// Marginal treatment rates of the fitting population.
struct ArmRates {
  double p1 = 0.5;  // P(T = 1)
  double p0 = 0.5;
};

/// The covariate-shift weight from the calibration population (arm t1) to the
/// target population t2, as a function of the propensity e(x):
///   target t2=1:  t1=1 -> 1,            t1=0 -> e/(1-e) * p0/p1
///   target t2=0:  t1=1 -> (1-e)/e * p1/p0,  t1=0 -> 1
///   whole:        t1=1 -> p1/e,         t1=0 -> p0/(1-e)
/// e_x is clipped into [eps, 1-eps] before the lookup.
double sensitivity_weight(const SensitivityTarget& target, double e_x,
                          const ArmRates& rates, double eps = 0.01);

struct SensitivityOptions {
  std::uint64_t seed = 0;
  Learners learners = Learners::defaults();
  /// Known propensity score, e.g. the design probability of a randomized
  /// trial; skips propensity fitting.
  std::optional<WeightFn> known_e;
  double propensity_eps = 0.01;
};

struct SensitivityResult {
  std::vector<PredictionInterval> intervals;  // aligned with test_X rows
  SplitPlan plan;                             // test folds unused
  ArmRates rates;
};

/// Counterfactual prediction intervals for Y(t1) on population t2: split the
/// data, fit the arm's mean model and the propensity on fold 0, calibrate on
/// fold 1's arm-t1 rows with the sensitivity covariate-shift weights, and
/// invert the worst-case-adjusted weighted quantile.
SensitivityResult counterfactual_interval(const ObservationalData& data,
                                          const Eigen::MatrixXd& test_X,
                                          const SensitivityTarget& target,
                                          const MethodConfig& cfg,
                                          const SensitivityOptions& opts = {});

/// Intervals for the individual treatment effect Y(1) - Y(0) on population
/// t2, combining per-arm counterfactual intervals at levels 1 - budget.first
/// and 1 - budget.second (budget.first + budget.second == cfg.alpha) via a
/// union bound: [L1 - U0, U1 - L0].
SensitivityResult ite_interval(const ObservationalData& data,
                               const Eigen::MatrixXd& test_X,
                               SensitivityTarget::Population t2,
                               const MethodConfig& cfg,
                               std::optional<std::pair<double, double>> budget_split =
                                   std::nullopt,
                               const SensitivityOptions& opts = {});

}  // namespace wrcp
