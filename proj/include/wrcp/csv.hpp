#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "wrcp/conformal.hpp"
#include "wrcp/data.hpp"

namespace wrcp {

/// A parsed data table. Covariate columns are x0..x{d-1} (all required, in
/// order), `y` and `t` are optional. Any other column name is a DataError.
struct CsvTable {
  Eigen::MatrixXd X;
  std::optional<Eigen::VectorXd> y;
  std::optional<std::vector<int>> t;
};

/// Reads a UTF-8 CSV with a mandatory header row. Parse failures carry the
/// file name and 1-based line number. "inf"/"-inf" are legal values.
CsvTable read_csv_table(const std::string& path);

/// Writes x0..x{d-1}[,y][,t] with %.17g doubles, so read(write(x)) == x.
void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd* y = nullptr,
                       const std::vector<int>* t = nullptr);

/// One block of interval rows: lower,upper,threshold,is_infinite,fold,method,rho.
struct IntervalBlock {
  std::string method;
  double rho = 0.0;
  std::vector<PredictionInterval> intervals;
};

void write_intervals_csv(const std::string& path,
                         const std::vector<IntervalBlock>& blocks);
std::vector<IntervalBlock> read_intervals_csv(const std::string& path);

/// Atomic file write: the content lands under `path` via a temp file + rename.
void write_file_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

}  // namespace wrcp
