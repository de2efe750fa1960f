#pragma once

#include <vector>

namespace wrcp {

/// A discrete score distribution: finite scores with nonnegative weights plus
/// an explicit point mass at +infinity (the test point's atom). Normalized
/// instances have weights + inf_mass summing to 1.
struct ScoreSet {
  std::vector<double> scores;
  std::vector<double> weights;
  double inf_mass = 0.0;
};

/// Normalizes raw calibration weights together with the test point's weight:
/// weights[i] = raw[i] / (sum(raw) + test_weight), inf_mass = test_weight / (...).
/// Scores are left empty for the caller to fill. Throws DataError("degenerate
/// weights") when everything is zero (or negative weights are present).
ScoreSet normalize_weights(const std::vector<double>& raw_weights, double test_weight);

/// Smallest threshold t (a score value or +inf) whose cumulative weight
/// P(score <= t) reaches `level`. Ties accumulate weight before the
/// comparison; +inf is returned when the finite mass never reaches `level`.
/// The set must be normalized.
double weighted_quantile(double level, const ScoreSet& set);

/// Quantile(level, {scores} u {+inf}): the ceil((n+1) * level)-th smallest of
/// the scores with +inf appended, i.e. the split-conformal threshold.
double conformal_quantile(double level, const std::vector<double>& scores);

}  // namespace wrcp
