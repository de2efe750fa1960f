#include "wrcp/csv.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "wrcp/errors.hpp"

namespace wrcp {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(trim(field));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& s, const std::string& where) {
  if (s.empty()) throw DataError(where + ": empty field");
  const char* begin = s.c_str();
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(begin, &end);
  if (end != begin + s.size() || errno == ERANGE) {
    throw DataError(where + ": cannot parse number '" + s + "'");
  }
  return v;
}

std::string fmt_g17(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out << content;
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("cannot rename '" + tmp + "' to '" + path + "'");
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  const std::vector<std::string> header = split_fields(line);

  // map header to column roles
  std::vector<int> x_col;  // x_col[j] = field index of xj
  int y_col = -1;
  int t_col = -1;
  {
    std::vector<int> xs(header.size(), -1);
    int d = 0;
    for (std::size_t i = 0; i < header.size(); ++i) {
      const std::string& h = header[i];
      if (h == "y") {
        if (y_col >= 0) throw DataError(path + ": duplicate column 'y'");
        y_col = static_cast<int>(i);
      } else if (h == "t") {
        if (t_col >= 0) throw DataError(path + ": duplicate column 't'");
        t_col = static_cast<int>(i);
      } else if (h.size() > 1 && h[0] == 'x') {
        char* end = nullptr;
        const long j = std::strtol(h.c_str() + 1, &end, 10);
        if (*end != '\0' || j < 0 || j >= static_cast<long>(header.size())) {
          throw DataError(path + ": unexpected column '" + h + "'");
        }
        if (xs[static_cast<std::size_t>(j)] >= 0) {
          throw DataError(path + ": duplicate column '" + h + "'");
        }
        xs[static_cast<std::size_t>(j)] = static_cast<int>(i);
        d = std::max(d, static_cast<int>(j) + 1);
      } else {
        throw DataError(path + ": unexpected column '" + h + "'");
      }
    }
    if (d == 0) throw DataError(path + ": no covariate columns x0..x{d-1}");
    for (int j = 0; j < d; ++j) {
      if (xs[static_cast<std::size_t>(j)] < 0) {
        throw DataError(path + ": missing column 'x" + std::to_string(j) + "'");
      }
      x_col.push_back(xs[static_cast<std::size_t>(j)]);
    }
  }

  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::vector<std::string> fields = split_fields(line);
    const std::string where = path + ":" + std::to_string(lineno);
    if (fields.size() != header.size()) {
      throw DataError(where + ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    std::vector<double> row(fields.size());
    for (std::size_t i = 0; i < fields.size(); ++i) {
      row[i] = parse_double(fields[i], where);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  CsvTable table;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(x_col.size());
  table.X.resize(n, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      table.X(i, j) = rows[static_cast<std::size_t>(i)]
                          [static_cast<std::size_t>(x_col[static_cast<std::size_t>(j)])];
    }
  }
  if (y_col >= 0) {
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      y(i) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(y_col)];
    }
    table.y = std::move(y);
  }
  if (t_col >= 0) {
    std::vector<int> t(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(t_col)];
      if (v != 0.0 && v != 1.0) {
        throw DataError(path + ":" + std::to_string(i + 2) +
                        ": treatment must be 0 or 1");
      }
      t[static_cast<std::size_t>(i)] = static_cast<int>(v);
    }
    table.t = std::move(t);
  }
  return table;
}

void write_dataset_csv(const std::string& path, const Eigen::MatrixXd& X,
                       const Eigen::VectorXd* y, const std::vector<int>* t) {
  std::string out;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    if (j) out += ',';
    out += "x" + std::to_string(j);
  }
  if (y) out += ",y";
  if (t) out += ",t";
  out += '\n';
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if (j) out += ',';
      out += fmt_g17(X(i, j));
    }
    if (y) {
      out += ',';
      out += fmt_g17((*y)(i));
    }
    if (t) {
      out += ',';
      out += std::to_string((*t)[static_cast<std::size_t>(i)]);
    }
    out += '\n';
  }
  write_file_atomic(path, out);
}

void write_intervals_csv(const std::string& path,
                         const std::vector<IntervalBlock>& blocks) {
  std::string out = "lower,upper,threshold,is_infinite,fold,method,rho\n";
  for (const IntervalBlock& block : blocks) {
    for (const PredictionInterval& pi : block.intervals) {
      out += fmt_g17(pi.lower);
      out += ',';
      out += fmt_g17(pi.upper);
      out += ',';
      out += fmt_g17(pi.threshold);
      out += ',';
      out += pi.is_infinite ? '1' : '0';
      out += ',';
      out += std::to_string(pi.fold);
      out += ',';
      out += block.method;
      out += ',';
      out += fmt_g17(block.rho);
      out += '\n';
    }
  }
  write_file_atomic(path, out);
}

std::vector<IntervalBlock> read_intervals_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": missing header row");
  if (trim(line) != "lower,upper,threshold,is_infinite,fold,method,rho") {
    throw DataError(path + ": unexpected interval header");
  }
  std::vector<IntervalBlock> blocks;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const std::vector<std::string> f = split_fields(line);
    if (f.size() != 7) throw DataError(where + ": expected 7 fields");
    PredictionInterval pi;
    pi.lower = parse_double(f[0], where);
    pi.upper = parse_double(f[1], where);
    pi.threshold = parse_double(f[2], where);
    pi.is_infinite = f[3] == "1";
    pi.fold = static_cast<int>(parse_double(f[4], where));
    pi.center = pi.is_infinite ? 0.0 : 0.5 * (pi.lower + pi.upper);
    const double rho = parse_double(f[6], where);
    if (blocks.empty() || blocks.back().method != f[5] ||
        blocks.back().rho != rho) {
      blocks.push_back({f[5], rho, {}});
    }
    blocks.back().intervals.push_back(pi);
  }
  return blocks;
}

}  // namespace wrcp
