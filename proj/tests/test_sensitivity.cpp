#include "wrcp/sensitivity.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

#include "wrcp/errors.hpp"
#include "wrcp/quantile.hpp"
#include "wrcp/rng.hpp"

using namespace wrcp;

namespace {

using Pop = SensitivityTarget::Population;

// randomized design: T ~ Bern(p1) independent of X, Y(t) linear in x
ObservationalData randomized_data(Eigen::Index n, Eigen::Index d, double p1, Rng& rng,
                                  double control_shift = 0.0) {
  ObservationalData data;
  data.X.resize(n, d);
  data.t.resize(static_cast<std::size_t>(n));
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) data.X(i, j) = rng.normal();
    const int t = rng.uniform() < p1 ? 1 : 0;
    data.t[static_cast<std::size_t>(i)] = t;
    const double mean = data.X(i, 0) + 0.5 * data.X(i, 1);
    data.y(i) = mean + (t == 0 ? control_shift : 0.0) + rng.normal();
  }
  return data;
}

}  // namespace

TEST_CASE("sensitivity_weight table cells") {
  const ArmRates even{0.5, 0.5};
  // diagonal cells are 1 regardless of e and rates
  for (double e : {0.1, 0.25, 0.5, 0.9}) {
    for (double p1 : {0.3, 0.5, 0.8}) {
      const ArmRates rates{p1, 1.0 - p1};
      CHECK(sensitivity_weight({1, Pop::Treated}, e, rates) == 1.0);
      CHECK(sensitivity_weight({0, Pop::Control}, e, rates) == 1.0);
    }
  }
  CHECK(sensitivity_weight({1, Pop::Control}, 0.5, even) == doctest::Approx(1.0));
  CHECK(sensitivity_weight({1, Pop::Whole}, 0.25, even) == doctest::Approx(2.0));

  // full table against direct arithmetic
  for (double e : {0.25, 0.5, 0.75}) {
    for (double p1 : {0.3, 0.5}) {
      const ArmRates rates{p1, 1.0 - p1};
      CHECK(sensitivity_weight({1, Pop::Control}, e, rates) ==
            doctest::Approx((1.0 - e) / e * p1 / (1.0 - p1)));
      CHECK(sensitivity_weight({1, Pop::Whole}, e, rates) == doctest::Approx(p1 / e));
      CHECK(sensitivity_weight({0, Pop::Treated}, e, rates) ==
            doctest::Approx(e / (1.0 - e) * (1.0 - p1) / p1));
      CHECK(sensitivity_weight({0, Pop::Whole}, e, rates) ==
            doctest::Approx((1.0 - p1) / (1.0 - e)));
    }
  }
}

TEST_CASE("sensitivity_weight identities") {
  // whole-population weights average back to 1: w(1,o) e + w(0,o) (1-e) = 1
  for (double e : {0.2, 0.4, 0.6}) {
    for (double p1 : {0.3, 0.5, 0.7}) {
      const ArmRates rates{p1, 1.0 - p1};
      const double combined = sensitivity_weight({1, Pop::Whole}, e, rates) * e +
                              sensitivity_weight({0, Pop::Whole}, e, rates) * (1.0 - e);
      CHECK(combined == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  // label swap maps cells onto each other
  for (double e : {0.2, 0.45, 0.7}) {
    for (double p1 : {0.35, 0.6}) {
      const ArmRates rates{p1, 1.0 - p1};
      const ArmRates swapped{1.0 - p1, p1};
      CHECK(sensitivity_weight({1, Pop::Control}, e, rates) ==
            doctest::Approx(sensitivity_weight({0, Pop::Treated}, 1.0 - e, swapped)));
      CHECK(sensitivity_weight({1, Pop::Whole}, e, rates) ==
            doctest::Approx(sensitivity_weight({0, Pop::Whole}, 1.0 - e, swapped)));
    }
  }
  // clipping keeps extreme propensities finite
  const double w = sensitivity_weight({1, Pop::Whole}, 0.0, {0.5, 0.5});
  CHECK(w == doctest::Approx(0.5 / 0.01));
  CHECK_THROWS_AS(sensitivity_weight({2, Pop::Whole}, 0.5, {0.5, 0.5}), DataError);
  CHECK_THROWS_AS(sensitivity_weight({1, Pop::Whole}, 0.5, {1.0, 0.0}), DataError);
}

TEST_CASE("counterfactual_interval reduces to plain CP on the arm when weights are flat") {
  Rng rng(41);
  const ObservationalData data = randomized_data(160, 2, 0.5, rng);
  const Eigen::MatrixXd test_X = Eigen::MatrixXd::Random(12, 2);

  MethodConfig cfg;
  cfg.rho = RobustLevel{0.0};
  cfg.alpha = 0.2;
  SensitivityOptions opts;
  opts.seed = 9;
  opts.known_e = [](const Eigen::VectorXd&) { return 0.5; };

  const SensitivityTarget target{1, Pop::Treated};  // cell (1,1): weights exactly 1
  const SensitivityResult result =
      counterfactual_interval(data, test_X, target, cfg, opts);
  REQUIRE(result.intervals.size() == 12);

  // reproduce the arm-level split-conformal threshold by hand
  const SplitPlan plan = SplitPlan::make(data.size(), test_X.rows(), opts.seed);
  std::vector<Eigen::Index> fit_arm;
  for (Eigen::Index i : plan.tr0) {
    if (data.t[static_cast<std::size_t>(i)] == 1) fit_arm.push_back(i);
  }
  Dataset arm{select_rows(data.X, fit_arm), Eigen::VectorXd(fit_arm.size())};
  for (std::size_t i = 0; i < fit_arm.size(); ++i) arm.y(i) = data.y(fit_arm[i]);
  const auto mu = Learners::defaults().fit_mean(arm, mix_seed(opts.seed, seed_tag::kMeanFit));
  std::vector<double> arm_scores;
  for (Eigen::Index i : plan.tr1) {
    if (data.t[static_cast<std::size_t>(i)] != 1) continue;
    arm_scores.push_back(std::fabs(data.y(i) - mu->predict(data.X.row(i))));
  }
  const double expected = conformal_quantile(0.8, arm_scores);
  for (const PredictionInterval& pi : result.intervals) {
    CHECK(pi.threshold == expected);
  }

  // any constant known propensity gives the same thresholds (scale invariance)
  SensitivityOptions skew = opts;
  skew.known_e = [](const Eigen::VectorXd&) { return 0.3; };
  const SensitivityResult skewed = counterfactual_interval(
      data, test_X, SensitivityTarget{1, Pop::Whole}, cfg, skew);
  for (std::size_t i = 0; i < result.intervals.size(); ++i) {
    CHECK(skewed.intervals[i].threshold == result.intervals[i].threshold);
  }
}

TEST_CASE("counterfactual_interval error paths") {
  Rng rng(42);
  ObservationalData data = randomized_data(60, 2, 0.5, rng);
  const Eigen::MatrixXd test_X = Eigen::MatrixXd::Random(5, 2);
  MethodConfig cfg;
  cfg.rho = RobustLevel{0.0};

  // single-arm data: no propensity, no calibration for the other arm
  for (auto& t : data.t) t = 1;
  CHECK_THROWS_AS(
      counterfactual_interval(data, test_X, {1, Pop::Whole}, cfg, {}), DataError);
  CHECK_THROWS_AS(
      counterfactual_interval(data, test_X, {0, Pop::Whole}, cfg, {}), DataError);
}

TEST_CASE("ite_interval combines the per-arm intervals by a union bound") {
  Rng rng(43);
  const ObservationalData data = randomized_data(240, 2, 0.5, rng);
  const Eigen::MatrixXd test_X = Eigen::MatrixXd::Random(10, 2);

  MethodConfig cfg;
  cfg.rho = RobustLevel{0.0};
  cfg.alpha = 0.2;
  SensitivityOptions opts;
  opts.seed = 13;
  opts.known_e = [](const Eigen::VectorXd&) { return 0.5; };

  const SensitivityResult ite =
      ite_interval(data, test_X, Pop::Whole, cfg, std::nullopt, opts);

  // default split alpha/2 each: reproduce the arms at alpha = 0.1
  MethodConfig half = cfg;
  half.alpha = 0.1;
  const SensitivityResult c1 =
      counterfactual_interval(data, test_X, {1, Pop::Whole}, half, opts);
  const SensitivityResult c0 =
      counterfactual_interval(data, test_X, {0, Pop::Whole}, half, opts);
  REQUIRE(ite.intervals.size() == 10);
  for (std::size_t i = 0; i < 10; ++i) {
    if (ite.intervals[i].is_infinite) {
      CHECK((c1.intervals[i].is_infinite || c0.intervals[i].is_infinite));
      continue;
    }
    CHECK(ite.intervals[i].lower ==
          doctest::Approx(c1.intervals[i].lower - c0.intervals[i].upper));
    CHECK(ite.intervals[i].upper ==
          doctest::Approx(c1.intervals[i].upper - c0.intervals[i].lower));
    // interval arithmetic: width adds up
    CHECK(ite.intervals[i].length() ==
          doctest::Approx(c1.intervals[i].length() + c0.intervals[i].length()));
  }

  CHECK_THROWS_AS(
      ite_interval(data, test_X, Pop::Whole, cfg, std::make_pair(0.3, 0.2), opts),
      ConfigError);
}

TEST_CASE("population parsing") {
  CHECK(parse_population("whole") == Pop::Whole);
  CHECK(parse_population("0") == Pop::Control);
  CHECK(parse_population("treated") == Pop::Treated);
  CHECK_THROWS_AS(parse_population("nope"), ConfigError);
}
