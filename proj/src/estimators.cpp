#include "wrcp/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wrcp/errors.hpp"
#include "wrcp/rng.hpp"

namespace wrcp {

// ---------------------------------------------------------------------------
// Standardizer
// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const Eigen::MatrixXd& X) {
  Standardizer s;
  const auto n = static_cast<double>(X.rows());
  s.mean = X.colwise().mean();
  s.scale.resize(X.cols());
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double var = (X.col(j).array() - s.mean(j)).square().sum() / n;
    s.scale(j) = var > 0.0 ? std::sqrt(var) : 1.0;
  }
  return s;
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& X) const {
  return (X.rowwise() - mean.transpose()).array().rowwise() /
         scale.transpose().array();
}

Eigen::VectorXd Standardizer::apply_row(const Eigen::VectorXd& x) const {
  return (x - mean).cwiseQuotient(scale);
}

// ---------------------------------------------------------------------------
// Lasso
// ---------------------------------------------------------------------------

Eigen::VectorXd MeanModel::predict_many(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd out(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) out(i) = predict(X.row(i));
  return out;
}

namespace {

double soft_threshold(double z, double lambda) {
  if (z > lambda) return z - lambda;
  if (z < -lambda) return z + lambda;
  return 0.0;
}

double lasso_objective(const Eigen::VectorXd& residual, const Eigen::VectorXd& beta,
                       double lambda) {
  const auto n = static_cast<double>(residual.size());
  return residual.squaredNorm() / (2.0 * n) + lambda * beta.lpNorm<1>();
}

// Cyclic coordinate descent on pre-standardized X and centered y. `beta` is
// used as the warm start. Returns the per-sweep objective values.
std::vector<double> coordinate_descent(const Eigen::MatrixXd& Xs,
                                       const Eigen::VectorXd& yc,
                                       const Eigen::VectorXd& col_msq, double lambda,
                                       int max_sweeps, double tol,
                                       Eigen::VectorXd& beta) {
  const auto n = static_cast<double>(Xs.rows());
  Eigen::VectorXd residual = yc - Xs * beta;
  std::vector<double> objective;
  objective.reserve(16);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < Xs.cols(); ++j) {
      if (col_msq(j) <= 0.0) continue;  // constant column, coefficient stays 0
      const double old = beta(j);
      const double rho = Xs.col(j).dot(residual) / n + col_msq(j) * old;
      const double updated = soft_threshold(rho, lambda) / col_msq(j);
      if (updated != old) {
        residual += Xs.col(j) * (old - updated);
        beta(j) = updated;
        max_change = std::max(max_change, std::fabs(updated - old));
      }
    }
    objective.push_back(lasso_objective(residual, beta, lambda));
    if (max_change < tol) break;
  }
  return objective;
}

std::vector<double> default_lambda_grid(const Eigen::MatrixXd& Xs,
                                        const Eigen::VectorXd& yc, int n_lambda) {
  const auto n = static_cast<double>(Xs.rows());
  double lambda_max = 0.0;
  for (Eigen::Index j = 0; j < Xs.cols(); ++j) {
    lambda_max = std::max(lambda_max, std::fabs(Xs.col(j).dot(yc)) / n);
  }
  if (lambda_max <= 0.0) return {0.0};
  std::vector<double> grid(n_lambda);
  const double ratio = 1e-3;
  for (int i = 0; i < n_lambda; ++i) {
    const double frac =
        n_lambda == 1 ? 0.0 : static_cast<double>(i) / (n_lambda - 1);
    grid[i] = lambda_max * std::pow(ratio, frac);
  }
  return grid;  // descending: warm starts walk down the path
}

}  // namespace

double LassoModel::predict(const Eigen::VectorXd& x) const {
  return raw_intercept_ + raw_coef_.dot(x);
}

std::shared_ptr<const LassoModel> fit_mean_regressor(const Dataset& data,
                                                     const LassoOptions& opts) {
  const Eigen::Index n = data.size();
  const Eigen::Index d = data.dim();
  if (n < 2) throw DataError("fit_mean_regressor: need at least 2 rows");
  if (!data.X.allFinite() || !data.y.allFinite()) {
    throw DataError("fit_mean_regressor: non-finite entries");
  }

  const Standardizer scaler = Standardizer::fit(data.X);
  const Eigen::MatrixXd Xs = scaler.apply(data.X);
  const double y_mean = data.y.mean();
  const Eigen::VectorXd yc = data.y.array() - y_mean;

  Eigen::VectorXd col_msq(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    col_msq(j) = Xs.col(j).squaredNorm() / static_cast<double>(n);
  }

  std::vector<double> grid =
      opts.lambda_grid.empty() ? default_lambda_grid(Xs, yc, opts.n_lambda)
                               : opts.lambda_grid;
  std::sort(grid.begin(), grid.end(), std::greater<>());

  double best_lambda = grid.front();
  if (grid.size() > 1) {
    // k-fold CV over the path, folds assigned by seeded shuffle.
    const int folds = std::min<int>(opts.cv_folds, static_cast<int>(n));
    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(mix_seed(opts.seed, seed_tag::kMeanFit));
    rng.shuffle(perm);

    std::vector<double> cv_mse(grid.size(), 0.0);
    for (int fold = 0; fold < folds; ++fold) {
      std::vector<Eigen::Index> tr, ho;
      for (Eigen::Index i = 0; i < n; ++i) {
        (static_cast<int>(i) % folds == fold ? ho : tr).push_back(perm[i]);
      }
      if (ho.empty() || tr.size() < 2) continue;
      Eigen::MatrixXd Xtr = select_rows(Xs, tr);
      Eigen::VectorXd ytr(tr.size());
      for (std::size_t i = 0; i < tr.size(); ++i) ytr(i) = yc(tr[i]);
      const double ytr_mean = ytr.mean();
      ytr.array() -= ytr_mean;
      Eigen::VectorXd fold_msq(d);
      for (Eigen::Index j = 0; j < d; ++j) {
        fold_msq(j) = Xtr.col(j).squaredNorm() / static_cast<double>(tr.size());
      }
      Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
      for (std::size_t gi = 0; gi < grid.size(); ++gi) {
        coordinate_descent(Xtr, ytr, fold_msq, grid[gi], opts.max_sweeps, opts.tol,
                           beta);
        double mse = 0.0;
        for (Eigen::Index hi : ho) {
          const double pred = ytr_mean + beta.dot(Xs.row(hi));
          const double err = yc(hi) - pred;
          mse += err * err;
        }
        cv_mse[gi] += mse / static_cast<double>(ho.size());
      }
    }
    // smallest mean MSE; ties resolved toward the sparser (larger) lambda
    std::size_t best = 0;
    for (std::size_t gi = 1; gi < grid.size(); ++gi) {
      if (cv_mse[gi] < cv_mse[best] - 1e-12) best = gi;
    }
    best_lambda = grid[best];
  }

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
  auto model = std::make_shared<LassoModel>();
  model->objective_path_ = coordinate_descent(Xs, yc, col_msq, best_lambda,
                                              opts.max_sweeps, opts.tol, beta);
  model->lambda_ = best_lambda;
  model->raw_coef_ = beta.cwiseQuotient(scaler.scale);
  model->raw_intercept_ = y_mean - model->raw_coef_.dot(scaler.mean);
  return model;
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

namespace {

double log1pexp(double s) {
  // numerically stable log(1 + exp(s))
  if (s > 35.0) return s;
  if (s < -35.0) return std::exp(s);
  return std::log1p(std::exp(s));
}

double sigmoid(double s) {
  if (s >= 0.0) {
    const double e = std::exp(-s);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(s);
  return e / (1.0 + e);
}

}  // namespace

double LogisticModel::probability(const Eigen::VectorXd& x) const {
  return sigmoid(intercept_ + coef_.dot(scaler_.apply_row(x)));
}

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                           const LogisticOptions& opts) {
  const Eigen::Index n = X.rows();
  const Eigen::Index d = X.cols();
  if (n == 0 || static_cast<Eigen::Index>(labels.size()) != n) {
    throw DataError("fit_logistic: empty data or label length mismatch");
  }

  LogisticModel model;
  model.scaler_ = Standardizer::fit(X);
  const Eigen::MatrixXd Xs = model.scaler_.apply(X);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y(i) = labels[i] ? 1.0 : 0.0;

  // theta = (coefficients, intercept); loss = mean logistic loss + l2/2 |coef|^2
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d + 1);
  const auto nd = static_cast<double>(n);

  auto loss_at = [&](const Eigen::VectorXd& th) {
    const Eigen::VectorXd s = (Xs * th.head(d)).array() + th(d);
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += log1pexp(s(i)) - y(i) * s(i);
    return loss / nd + 0.5 * opts.l2 * th.head(d).squaredNorm();
  };
  auto grad_at = [&](const Eigen::VectorXd& th) {
    const Eigen::VectorXd s = (Xs * th.head(d)).array() + th(d);
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = sigmoid(s(i));
    Eigen::VectorXd g(d + 1);
    g.head(d) = Xs.transpose() * (p - y) / nd + opts.l2 * th.head(d);
    g(d) = (p - y).sum() / nd;
    return g;
  };

  double loss = loss_at(theta);
  double step = 1.0;
  for (int iter = 0; iter < opts.max_iters; ++iter) {
    const Eigen::VectorXd g = grad_at(theta);
    if (g.lpNorm<Eigen::Infinity>() < opts.grad_tol) break;
    const double gsq = g.squaredNorm();
    step = std::min(step * 2.0, 1e3);
    // Armijo backtracking
    for (;;) {
      const Eigen::VectorXd cand = theta - step * g;
      const double cand_loss = loss_at(cand);
      if (cand_loss <= loss - 0.5 * step * gsq || step < 1e-14) {
        theta = cand;
        loss = cand_loss;
        break;
      }
      step *= 0.5;
    }
  }

  model.coef_ = theta.head(d);
  model.intercept_ = theta(d);

  // perfect separation: every training point classified correctly
  bool separated = true;
  const Eigen::VectorXd s = (Xs * model.coef_).array() + model.intercept_;
  for (Eigen::Index i = 0; i < n && separated; ++i) {
    separated = (y(i) > 0.5) == (s(i) > 0.0);
  }
  model.separation_warning_ = separated;
  return model;
}

// ---------------------------------------------------------------------------
// Density ratio
// ---------------------------------------------------------------------------

double DensityRatioModel::ratio(const Eigen::VectorXd& x) const {
  const double p = clf_.probability(x);
  const double odds = p >= 1.0 ? clip_.hi : p / (1.0 - p);
  return std::clamp(odds, clip_.lo, clip_.hi);
}

std::shared_ptr<const DensityRatioModel> fit_density_ratio(
    const Eigen::MatrixXd& source_X, const Eigen::MatrixXd& target_X, RatioClip clip,
    const LogisticOptions& opts) {
  if (source_X.rows() == 0) throw DataError("fit_density_ratio: empty source");
  if (target_X.rows() == 0) throw DataError("fit_density_ratio: empty target");
  if (source_X.cols() != target_X.cols()) {
    throw DataError("fit_density_ratio: dimension mismatch");
  }
  if (!(clip.lo > 0.0) || clip.lo > clip.hi || !std::isfinite(clip.hi)) {
    throw DataError("fit_density_ratio: invalid clip bounds");
  }

  Eigen::MatrixXd X(source_X.rows() + target_X.rows(), source_X.cols());
  X << source_X, target_X;
  std::vector<int> labels(static_cast<std::size_t>(X.rows()), 0);
  std::fill(labels.begin() + source_X.rows(), labels.end(), 1);

  auto model = std::make_shared<DensityRatioModel>();
  model->clip_ = clip;
  model->clf_ = fit_logistic(X, labels, opts);

  double mean_ratio = 0.0;
  for (Eigen::Index i = 0; i < source_X.rows(); ++i) {
    mean_ratio += model->ratio(source_X.row(i));
  }
  model->mean_source_ratio_ = mean_ratio / static_cast<double>(source_X.rows());
  return model;
}

// ---------------------------------------------------------------------------
// Propensity
// ---------------------------------------------------------------------------

double LogisticPropensity::propensity(const Eigen::VectorXd& x) const {
  return std::clamp(clf_.probability(x), eps_, 1.0 - eps_);
}

std::shared_ptr<const LogisticPropensity> fit_propensity(
    const Eigen::MatrixXd& X, const std::vector<int>& treatments, double eps,
    const LogisticOptions& opts) {
  const auto treated = std::count(treatments.begin(), treatments.end(), 1);
  if (treated == 0 || treated == static_cast<long>(treatments.size())) {
    throw DataError("degenerate treatment arm");
  }
  auto model = std::make_shared<LogisticPropensity>();
  model->eps_ = eps;
  model->clf_ = fit_logistic(X, treatments, opts);
  return model;
}

double FunctionPropensity::propensity(const Eigen::VectorXd& x) const {
  return std::clamp(fn_(x), eps_, 1.0 - eps_);
}

// ---------------------------------------------------------------------------
// k-NN conditional CDF
// ---------------------------------------------------------------------------

std::vector<double> CdfModel::cdf_curve(const Eigen::VectorXd& x,
                                        const std::vector<double>& sorted_ts) const {
  std::vector<double> out(sorted_ts.size());
  for (std::size_t i = 0; i < sorted_ts.size(); ++i) out[i] = cdf(x, sorted_ts[i]);
  return out;
}

std::vector<double> KnnCdfModel::sorted_neighbor_scores(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd xs = scaler_.apply_row(x);
  const Eigen::Index n = X_.rows();
  std::vector<std::pair<double, Eigen::Index>> dist(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    dist[i] = {(X_.row(i).transpose() - xs).squaredNorm(), i};
  }
  const auto kth = dist.begin() + k_;
  std::nth_element(dist.begin(), kth - 1, dist.end());
  std::sort(dist.begin(), kth);  // deterministic neighbor set under distance ties

  std::vector<double> nbr(static_cast<std::size_t>(k_));
  for (int i = 0; i < k_; ++i) nbr[i] = scores_[static_cast<std::size_t>(dist[i].second)];
  std::sort(nbr.begin(), nbr.end());
  return nbr;
}

double KnnCdfModel::cdf(const Eigen::VectorXd& x, double t) const {
  const std::vector<double> nbr = sorted_neighbor_scores(x);
  const auto le = std::upper_bound(nbr.begin(), nbr.end(), t) - nbr.begin();
  return static_cast<double>(le) / static_cast<double>(k_);
}

std::vector<double> KnnCdfModel::cdf_curve(const Eigen::VectorXd& x,
                                           const std::vector<double>& sorted_ts) const {
  const std::vector<double> nbr = sorted_neighbor_scores(x);
  std::vector<double> out(sorted_ts.size());
  std::size_t pos = 0;
  for (std::size_t i = 0; i < sorted_ts.size(); ++i) {
    while (pos < nbr.size() && nbr[pos] <= sorted_ts[i]) ++pos;
    out[i] = static_cast<double>(pos) / static_cast<double>(k_);
  }
  return out;
}

std::shared_ptr<const KnnCdfModel> fit_conditional_cdf(const Eigen::MatrixXd& X,
                                                       const std::vector<double>& scores,
                                                       int k) {
  const Eigen::Index n = X.rows();
  if (n == 0 || static_cast<Eigen::Index>(scores.size()) != n) {
    throw DataError("fit_conditional_cdf: empty data or score length mismatch");
  }
  if (k == 0) k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
  if (k <= 0) throw DataError("fit_conditional_cdf: k must be positive");
  if (k > n) throw DataError("fit_conditional_cdf: k exceeds the number of rows");

  auto model = std::make_shared<KnnCdfModel>();
  model->scaler_ = Standardizer::fit(X);
  model->X_ = model->scaler_.apply(X);
  model->scores_ = scores;
  model->k_ = k;
  return model;
}

// ---------------------------------------------------------------------------
// Score function
// ---------------------------------------------------------------------------

double apply_score(const ScoreFunction& fn, const Eigen::VectorXd& x, double y) {
  switch (fn.kind) {
    case ScoreFunction::Kind::AbsResidual:
      return std::fabs(y - fn.model->predict(x));
  }
  throw NumericalError("apply_score: unknown score kind");
}

// ---------------------------------------------------------------------------
// Default learner bundle
// ---------------------------------------------------------------------------

Learners Learners::defaults() {
  Learners l;
  l.fit_mean = [](const Dataset& data, std::uint64_t seed) {
    LassoOptions opts;
    opts.seed = seed;
    return fit_mean_regressor(data, opts);
  };
  l.fit_ratio = [](const Eigen::MatrixXd& source_X, const Eigen::MatrixXd& target_X) {
    return fit_density_ratio(source_X, target_X);
  };
  l.fit_cdf = [](const Eigen::MatrixXd& X, const std::vector<double>& scores) {
    return fit_conditional_cdf(X, scores);
  };
  l.fit_propensity = [](const Eigen::MatrixXd& X, const std::vector<int>& t) {
    return wrcp::fit_propensity(X, t);
  };
  return l;
}

}  // namespace wrcp
