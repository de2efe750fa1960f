#include "wrcp/estimators.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "wrcp/errors.hpp"
#include "wrcp/rng.hpp"

using namespace wrcp;

namespace {

Eigen::MatrixXd gaussian_matrix(Eigen::Index n, Eigen::Index d, Rng& rng,
                                double mean = 0.0) {
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) X(i, j) = mean + rng.normal();
  }
  return X;
}

}  // namespace

TEST_CASE("lasso recovers a noiseless linear signal") {
  Rng rng(1);
  Dataset data;
  data.X = gaussian_matrix(100, 1, rng);
  data.y = 2.0 * data.X.col(0);
  LassoOptions opts;
  opts.lambda_grid = {1e-8};
  const auto model = fit_mean_regressor(data, opts);
  CHECK(model->coefficients()(0) == doctest::Approx(2.0).epsilon(1e-3));
  CHECK(std::fabs(model->intercept()) < 1e-3);
  CHECK(model->predict(Eigen::VectorXd::Constant(1, 1.5)) ==
        doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("lasso support recovery on the sparse design") {
  Rng rng(2);
  const Eigen::Index n = 200, d = 50;
  Dataset data;
  data.X = gaussian_matrix(n, d, rng);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < 10; ++j) beta(j) = 0.47;
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y(i) = data.X.row(i).dot(beta) + rng.normal();
  }
  LassoOptions opts;
  opts.seed = 7;
  const auto model = fit_mean_regressor(data, opts);

  std::vector<Eigen::Index> order(d);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    return std::fabs(model->coefficients()(a)) > std::fabs(model->coefficients()(b));
  });
  int hits = 0;
  for (int r = 0; r < 10; ++r) {
    if (order[static_cast<std::size_t>(r)] < 10) ++hits;
  }
  CHECK(hits >= 8);
}

TEST_CASE("lasso on all-zero outcomes returns zero coefficients") {
  Rng rng(3);
  Dataset data;
  data.X = gaussian_matrix(40, 4, rng);
  data.y = Eigen::VectorXd::Zero(40);
  const auto model = fit_mean_regressor(data);
  CHECK(model->coefficients().lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(model->intercept() == 0.0);
}

TEST_CASE("lasso objective nonincreasing across sweeps") {
  Rng rng(4);
  Dataset data;
  data.X = gaussian_matrix(120, 20, rng);
  data.y.resize(120);
  for (Eigen::Index i = 0; i < 120; ++i) {
    data.y(i) = 0.8 * data.X(i, 0) - 0.3 * data.X(i, 5) + rng.normal();
  }
  const auto model = fit_mean_regressor(data);
  const std::vector<double>& path = model->objective_path();
  REQUIRE(!path.empty());
  for (std::size_t i = 1; i < path.size(); ++i) {
    CHECK(path[i] <= path[i - 1] + 1e-12);
  }
}

TEST_CASE("lasso input validation") {
  Dataset tiny;
  tiny.X = Eigen::MatrixXd::Zero(1, 2);
  tiny.y = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(fit_mean_regressor(tiny), DataError);

  Rng rng(5);
  Dataset bad;
  bad.X = gaussian_matrix(10, 2, rng);
  bad.y = Eigen::VectorXd::Zero(10);
  bad.y(3) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(fit_mean_regressor(bad), DataError);
}

TEST_CASE("density ratio with no shift is flat") {
  Rng rng(6);
  const Eigen::MatrixXd source = gaussian_matrix(2000, 2, rng);
  const Eigen::MatrixXd target = gaussian_matrix(2000, 2, rng);
  const auto model = fit_density_ratio(source, target);
  for (Eigen::Index i = 0; i < 50; ++i) {
    const double normalized = model->ratio(source.row(i)) / model->mean_source_ratio();
    CHECK(normalized == doctest::Approx(1.0).epsilon(0.1));
  }
}

TEST_CASE("density ratio recovers the Gaussian mean-shift log-ratio") {
  Rng rng(7);
  const Eigen::MatrixXd source = gaussian_matrix(5000, 1, rng);
  const Eigen::MatrixXd target = gaussian_matrix(5000, 1, rng, 0.5);
  const auto model = fit_density_ratio(source, target);
  // true log dQ/dP = 0.5 x - 0.125; equal class sizes keep the prior term 0
  for (double x = -2.0; x <= 2.0; x += 0.25) {
    const double got = std::log(model->ratio(Eigen::VectorXd::Constant(1, x)));
    CHECK(std::fabs(got - (0.5 * x - 0.125)) < 0.1);
  }
}

TEST_CASE("density ratio errors and clipping") {
  Rng rng(8);
  const Eigen::MatrixXd source = gaussian_matrix(50, 2, rng);
  CHECK_THROWS_AS(fit_density_ratio(source, Eigen::MatrixXd(0, 2)), DataError);
  CHECK_THROWS_AS(fit_density_ratio(Eigen::MatrixXd(0, 2), source), DataError);

  // perfectly separated classes: flagged, outputs still inside the clip range
  Eigen::MatrixXd far_target = gaussian_matrix(50, 2, rng);
  far_target.array() += 50.0;
  const auto model = fit_density_ratio(source, far_target);
  CHECK(model->separation_warning());
  for (Eigen::Index i = 0; i < source.rows(); ++i) {
    const double w = model->ratio(source.row(i));
    CHECK(w >= model->clip().lo);
    CHECK(w <= model->clip().hi);
  }
  CHECK(model->ratio(far_target.row(0)) <= model->clip().hi);
}

TEST_CASE("knn cdf with k=n is the global empirical cdf") {
  Rng rng(9);
  const Eigen::MatrixXd X = gaussian_matrix(40, 3, rng);
  std::vector<double> scores(40);
  for (auto& s : scores) s = rng.uniform() * 10.0;
  const auto model = fit_conditional_cdf(X, scores, 40);
  std::vector<double> sorted = scores;
  std::sort(sorted.begin(), sorted.end());
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(3);
  for (double t : {0.5, 3.0, 7.7}) {
    const auto rank = std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin();
    CHECK(model->cdf(q, t) == doctest::Approx(rank / 40.0));
  }
  CHECK(model->cdf(q, sorted.front() - 1.0) == 0.0);
  CHECK(model->cdf(q, sorted.back()) == 1.0);
}

TEST_CASE("knn cdf right-continuity at an atom") {
  Eigen::MatrixXd X(3, 1);
  X << 0.0, 5.0, 10.0;
  const std::vector<double> scores = {3.0, 8.0, 1.0};
  const auto model = fit_conditional_cdf(X, scores, 1);
  const Eigen::VectorXd q = Eigen::VectorXd::Zero(1);
  CHECK(model->cdf(q, 2.9) == 0.0);
  CHECK(model->cdf(q, 3.0) == 1.0);  // right-continuous step at the stored score
}

TEST_CASE("knn cdf monotone in t and curve consistency") {
  Rng rng(10);
  const Eigen::MatrixXd X = gaussian_matrix(60, 2, rng);
  std::vector<double> scores(60);
  for (auto& s : scores) s = rng.normal();
  const auto model = fit_conditional_cdf(X, scores);  // default k = ceil(sqrt(n))
  CHECK(model->k() == 8);

  std::vector<double> grid;
  for (double t = -3.0; t <= 3.0; t += 0.1) grid.push_back(t);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd q(2);
    q << rng.normal(), rng.normal();
    const std::vector<double> curve = model->cdf_curve(q, grid);
    double prev = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      CHECK(curve[i] == model->cdf(q, grid[i]));
      CHECK(curve[i] >= prev);
      CHECK(curve[i] >= 0.0);
      CHECK(curve[i] <= 1.0);
      prev = curve[i];
    }
  }
}

TEST_CASE("knn cdf input validation") {
  Eigen::MatrixXd X(5, 1);
  X << 1, 2, 3, 4, 5;
  const std::vector<double> scores = {1, 2, 3, 4, 5};
  CHECK_THROWS_AS(fit_conditional_cdf(X, scores, -1), DataError);
  CHECK_THROWS_AS(fit_conditional_cdf(X, scores, 6), DataError);
  CHECK_THROWS_AS(fit_conditional_cdf(Eigen::MatrixXd(0, 1), {}, 1), DataError);
}

TEST_CASE("propensity estimation") {
  Rng rng(11);
  {
    // randomized: e(x) = 0.5 independent of x
    const Eigen::MatrixXd X = gaussian_matrix(3000, 2, rng);
    std::vector<int> t(3000);
    for (auto& v : t) v = rng.uniform() < 0.5 ? 1 : 0;
    const auto model = fit_propensity(X, t);
    for (Eigen::Index i = 0; i < 20; ++i) {
      CHECK(model->propensity(X.row(i)) == doctest::Approx(0.5).epsilon(0.1));
    }
  }
  {
    // logistic truth e(x) = sigmoid(x1)
    const Eigen::MatrixXd X = gaussian_matrix(5000, 1, rng);
    std::vector<int> t(5000);
    for (Eigen::Index i = 0; i < 5000; ++i) {
      const double e = 1.0 / (1.0 + std::exp(-X(i, 0)));
      t[static_cast<std::size_t>(i)] = rng.uniform() < e ? 1 : 0;
    }
    const auto model = fit_propensity(X, t);
    for (double x = -2.0; x <= 2.0; x += 0.25) {
      const double truth = 1.0 / (1.0 + std::exp(-x));
      CHECK(std::fabs(model->propensity(Eigen::VectorXd::Constant(1, x)) - truth) <=
            0.05);
    }
  }
  {
    const Eigen::MatrixXd X = gaussian_matrix(10, 1, rng);
    const std::vector<int> all_treated(10, 1);
    CHECK_THROWS_WITH_AS(fit_propensity(X, all_treated), "degenerate treatment arm",
                         DataError);
  }
}

TEST_CASE("apply_score absolute residual") {
  Rng rng(12);
  Dataset data;
  data.X = gaussian_matrix(50, 1, rng);
  data.y = 2.0 * data.X.col(0);
  LassoOptions opts;
  opts.lambda_grid = {1e-10};
  const auto mu = fit_mean_regressor(data, opts);
  const ScoreFunction fn{ScoreFunction::Kind::AbsResidual, mu};

  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 1.0);
  const double center = mu->predict(x);
  CHECK(apply_score(fn, x, center) == doctest::Approx(0.0));
  CHECK(apply_score(fn, x, 0.0) == doctest::Approx(2.0).epsilon(1e-3));
  // symmetric in the residual sign
  for (double r : {0.3, 1.7, 4.0}) {
    CHECK(apply_score(fn, x, center + r) == doctest::Approx(apply_score(fn, x, center - r)));
    CHECK(apply_score(fn, x, center + r) >= 0.0);
  }
}
