#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace wrcp {

/// Labeled rows: one covariate vector per row of X, outcome in y.
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }

  Dataset rows(const std::vector<Eigen::Index>& idx) const {
    Dataset out;
    out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
    out.y.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.X.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
      out.y(static_cast<Eigen::Index>(i)) = y(idx[i]);
    }
    return out;
  }
};

/// Observational rows (x, t, y) where y is the realized outcome of arm t.
/// SUTVA (y == potential outcome of the received arm) is the caller's
/// responsibility.
struct ObservationalData {
  Eigen::MatrixXd X;
  std::vector<int> t;  // 0/1 treatment indicator per row
  Eigen::VectorXd y;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }
};

inline Eigen::MatrixXd select_rows(const Eigen::MatrixXd& X,
                                   const std::vector<Eigen::Index>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), X.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = X.row(idx[i]);
  }
  return out;
}

}  // namespace wrcp
