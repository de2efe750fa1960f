#include "wrcp/quantile.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wrcp/errors.hpp"
#include "wrcp/mathutil.hpp"

namespace wrcp {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack for cumulative-weight comparisons; absorbs summation roundoff so that
// a level sitting exactly on an atom boundary resolves to that atom. Safe as
// long as the smallest positive weight is much larger than this.
constexpr double kCumTol = 1e-10;
}  // namespace

ScoreSet normalize_weights(const std::vector<double>& raw_weights, double test_weight) {
  if (test_weight < 0.0) throw DataError("normalize_weights: negative test weight");
  double total = test_weight;
  for (double w : raw_weights) {
    if (w < 0.0) throw DataError("normalize_weights: negative weight");
    total += w;
  }
  if (total <= 0.0) throw DataError("degenerate weights");

  ScoreSet out;
  out.weights.resize(raw_weights.size());
  for (std::size_t i = 0; i < raw_weights.size(); ++i) {
    out.weights[i] = raw_weights[i] / total;
  }
  out.inf_mass = test_weight / total;
  return out;
}

double weighted_quantile(double level, const ScoreSet& set) {
  if (set.scores.size() != set.weights.size()) {
    throw DataError("weighted_quantile: scores/weights length mismatch");
  }
  const std::size_t n = set.scores.size();
  if (level <= 0.0) {
    return n == 0 ? kInf : *std::min_element(set.scores.begin(), set.scores.end());
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return set.scores[a] < set.scores[b];
  });

  double cum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double s = set.scores[order[i]];
    // merge tied scores before testing the level
    do {
      cum += set.weights[order[i]];
      ++i;
    } while (i < n && set.scores[order[i]] == s);
    if (cum + kCumTol >= level) return s;
  }
  return kInf;
}

double conformal_quantile(double level, const std::vector<double>& scores) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw DataError("conformal_quantile: non-finite score");
  }
  const std::size_t n = scores.size();
  const long long rank = safe_ceil(static_cast<double>(n + 1) * level);
  if (rank > static_cast<long long>(n)) return kInf;
  if (rank <= 1) {
    return n == 0 ? kInf : *std::min_element(scores.begin(), scores.end());
  }
  std::vector<double> sorted(scores);
  auto nth = sorted.begin() + (rank - 1);
  std::nth_element(sorted.begin(), nth, sorted.end());
  return *nth;
}

}  // namespace wrcp
