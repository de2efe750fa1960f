#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "wrcp/data.hpp"

namespace wrcp {

/// Per-column standardization (mean/scale) fitted on a training fold.
/// Constant columns get scale 1 so they pass through unchanged.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const Eigen::MatrixXd& X);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& X) const;
  Eigen::VectorXd apply_row(const Eigen::VectorXd& x) const;
};

// ---------------------------------------------------------------------------
// Mean regression (mu-hat)
// ---------------------------------------------------------------------------

class MeanModel {
public:
  virtual ~MeanModel() = default;
  virtual double predict(const Eigen::VectorXd& x) const = 0;
  Eigen::VectorXd predict_many(const Eigen::MatrixXd& X) const;
};

struct LassoOptions {
  std::vector<double> lambda_grid;  // empty: n_lambda log-spaced below lambda_max
  int n_lambda = 20;
  int cv_folds = 5;
  int max_sweeps = 1000;
  double tol = 1e-7;        // max coefficient change per sweep
  std::uint64_t seed = 0;   // CV fold assignment
};

/// L1-regularized least squares fit by cyclic coordinate descent on
/// standardized covariates, lambda selected by k-fold cross-validated MSE.
class LassoModel final : public MeanModel {
public:
  double predict(const Eigen::VectorXd& x) const override;

  /// Coefficients mapped back to the raw covariate scale.
  const Eigen::VectorXd& coefficients() const { return raw_coef_; }
  double intercept() const { return raw_intercept_; }
  double lambda() const { return lambda_; }
  /// Penalized objective value after each coordinate-descent sweep of the
  /// final refit (nonincreasing by construction of the updates).
  const std::vector<double>& objective_path() const { return objective_path_; }

private:
  friend std::shared_ptr<const LassoModel> fit_mean_regressor(const Dataset&,
                                                              const LassoOptions&);
  Eigen::VectorXd raw_coef_;
  double raw_intercept_ = 0.0;
  double lambda_ = 0.0;
  std::vector<double> objective_path_;
};

std::shared_ptr<const LassoModel> fit_mean_regressor(const Dataset& data,
                                                     const LassoOptions& opts = {});

// ---------------------------------------------------------------------------
// Binary probability models (shared by the ratio and propensity estimators)
// ---------------------------------------------------------------------------

struct LogisticOptions {
  int max_iters = 5000;
  double grad_tol = 1e-8;
  double l2 = 1e-9;  // tiny ridge keeps the MLE finite under separation
};

/// Logistic regression trained by full-batch gradient descent with
/// backtracking line search. Deterministic (zero initialization).
class LogisticModel {
public:
  double probability(const Eigen::VectorXd& x) const;  // P(label = 1 | x)
  bool separation_warning() const { return separation_warning_; }

private:
  friend LogisticModel fit_logistic(const Eigen::MatrixXd&, const std::vector<int>&,
                                    const LogisticOptions&);
  Standardizer scaler_;
  Eigen::VectorXd coef_;
  double intercept_ = 0.0;
  bool separation_warning_ = false;
};

LogisticModel fit_logistic(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                           const LogisticOptions& opts = {});

// ---------------------------------------------------------------------------
// Density-ratio model (w-hat)
// ---------------------------------------------------------------------------

class RatioModel {
public:
  virtual ~RatioModel() = default;
  /// Estimated dQ_X/dP_X at x, up to a constant factor; always within the
  /// model's clip bounds.
  virtual double ratio(const Eigen::VectorXd& x) const = 0;
  /// Mean of ratio() over the source sample seen at fit time; divides the
  /// raw ratio wherever a properly normalized likelihood ratio is needed.
  virtual double mean_source_ratio() const = 0;
};

struct RatioClip {
  double lo = 1e-3;
  double hi = 1e3;
};

/// Classifier-based estimator: a source-vs-target membership classifier whose
/// odds p/(1-p) are proportional to the covariate likelihood ratio.
class DensityRatioModel final : public RatioModel {
public:
  double ratio(const Eigen::VectorXd& x) const override;
  double mean_source_ratio() const override { return mean_source_ratio_; }
  bool separation_warning() const { return clf_.separation_warning(); }
  RatioClip clip() const { return clip_; }

private:
  friend std::shared_ptr<const DensityRatioModel> fit_density_ratio(
      const Eigen::MatrixXd&, const Eigen::MatrixXd&, RatioClip, const LogisticOptions&);
  LogisticModel clf_;
  RatioClip clip_;
  double mean_source_ratio_ = 1.0;
};

std::shared_ptr<const DensityRatioModel> fit_density_ratio(
    const Eigen::MatrixXd& source_X, const Eigen::MatrixXd& target_X,
    RatioClip clip = {}, const LogisticOptions& opts = {});

/// Adapts a user-supplied weight function w(x) to the RatioModel interface.
class FunctionRatio final : public RatioModel {
public:
  FunctionRatio(std::function<double(const Eigen::VectorXd&)> fn,
                double mean_source_ratio = 1.0)
      : fn_(std::move(fn)), mean_source_ratio_(mean_source_ratio) {}
  double ratio(const Eigen::VectorXd& x) const override { return fn_(x); }
  double mean_source_ratio() const override { return mean_source_ratio_; }

private:
  std::function<double(const Eigen::VectorXd&)> fn_;
  double mean_source_ratio_;
};

// ---------------------------------------------------------------------------
// Propensity model (e-hat)
// ---------------------------------------------------------------------------

class PropensityModel {
public:
  virtual ~PropensityModel() = default;
  /// P(T=1|x), clipped into [eps, 1-eps].
  virtual double propensity(const Eigen::VectorXd& x) const = 0;
};

class LogisticPropensity final : public PropensityModel {
public:
  double propensity(const Eigen::VectorXd& x) const override;
  double eps() const { return eps_; }

private:
  friend std::shared_ptr<const LogisticPropensity> fit_propensity(
      const Eigen::MatrixXd&, const std::vector<int>&, double, const LogisticOptions&);
  LogisticModel clf_;
  double eps_ = 0.01;
};

/// Fits P(T=1|x) by logistic regression; throws DataError("degenerate
/// treatment arm") when either arm is empty.
std::shared_ptr<const LogisticPropensity> fit_propensity(
    const Eigen::MatrixXd& X, const std::vector<int>& treatments, double eps = 0.01,
    const LogisticOptions& opts = {});

class FunctionPropensity final : public PropensityModel {
public:
  explicit FunctionPropensity(std::function<double(const Eigen::VectorXd&)> fn,
                              double eps = 0.01)
      : fn_(std::move(fn)), eps_(eps) {}
  double propensity(const Eigen::VectorXd& x) const override;

private:
  std::function<double(const Eigen::VectorXd&)> fn_;
  double eps_;
};

// ---------------------------------------------------------------------------
// Conditional CDF model (m-hat)
// ---------------------------------------------------------------------------

class CdfModel {
public:
  virtual ~CdfModel() = default;
  /// m(x; t): estimated P(S <= t | X = x); in [0,1], nondecreasing and
  /// right-continuous in t.
  virtual double cdf(const Eigen::VectorXd& x, double t) const = 0;
  /// cdf(x, t) for every t in an ascending grid; default loops over cdf().
  virtual std::vector<double> cdf_curve(const Eigen::VectorXd& x,
                                        const std::vector<double>& sorted_ts) const;
};

/// k-nearest-neighbor estimator: the empirical CDF of the scores of the k
/// nearest stored covariates (Euclidean distance in standardized coordinates,
/// ties broken by row index).
class KnnCdfModel final : public CdfModel {
public:
  double cdf(const Eigen::VectorXd& x, double t) const override;
  std::vector<double> cdf_curve(const Eigen::VectorXd& x,
                                const std::vector<double>& sorted_ts) const override;
  /// The k neighbor scores of x in ascending order (the model's step points).
  std::vector<double> sorted_neighbor_scores(const Eigen::VectorXd& x) const;
  int k() const { return k_; }

private:
  friend std::shared_ptr<const KnnCdfModel> fit_conditional_cdf(
      const Eigen::MatrixXd&, const std::vector<double>&, int);
  Standardizer scaler_;
  Eigen::MatrixXd X_;  // standardized
  std::vector<double> scores_;
  int k_ = 0;
};

/// k = 0 selects the default ceil(sqrt(n)).
std::shared_ptr<const KnnCdfModel> fit_conditional_cdf(const Eigen::MatrixXd& X,
                                                       const std::vector<double>& scores,
                                                       int k = 0);

// ---------------------------------------------------------------------------
// Nonconformity score
// ---------------------------------------------------------------------------

struct ScoreFunction {
  enum class Kind { AbsResidual };
  Kind kind = Kind::AbsResidual;
  std::shared_ptr<const MeanModel> model;
};

/// s(x, y); |y - mu(x)| for AbsResidual.
double apply_score(const ScoreFunction& fn, const Eigen::VectorXd& x, double y);

// ---------------------------------------------------------------------------
// Pluggable learner bundle
// ---------------------------------------------------------------------------

/// The fitting routines the conformal pipelines call. Any model satisfying
/// the interface invariants can be swapped in; the defaults are the built-in
/// lasso / logistic / k-NN learners.
struct Learners {
  std::function<std::shared_ptr<const MeanModel>(const Dataset&, std::uint64_t seed)>
      fit_mean;
  std::function<std::shared_ptr<const RatioModel>(const Eigen::MatrixXd& source_X,
                                                  const Eigen::MatrixXd& target_X)>
      fit_ratio;
  std::function<std::shared_ptr<const CdfModel>(const Eigen::MatrixXd& X,
                                                const std::vector<double>& scores)>
      fit_cdf;
  std::function<std::shared_ptr<const PropensityModel>(const Eigen::MatrixXd& X,
                                                       const std::vector<int>& t)>
      fit_propensity;

  static Learners defaults();
};

}  // namespace wrcp
