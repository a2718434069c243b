#include "lsvi/data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "lsvi/errors.hpp"
#include "lsvi/linalg.hpp"

namespace lsvi {

namespace {

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool is_intercept_column(const Eigen::VectorXd& col) {
  return (col.array() == 1.0).all();
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const LabelCoding& coding) {
  std::ifstream in(path);
  if (!in) throw ParseError("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_csv: empty file " + path);

  const auto header = split_row(line);
  int label_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (trim(header[j]) == label_column) label_idx = static_cast<int>(j);
  if (label_idx < 0)
    throw ParseError("load_csv: label column `" + label_column + "` not in header");
  const int width = static_cast<int>(header.size());

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  int rejected = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto cells = split_row(line);
    if (static_cast<int>(cells.size()) != width)
      throw ParseError("load_csv: line " + std::to_string(lineno) + " has " +
                       std::to_string(cells.size()) + " fields, expected " +
                       std::to_string(width));
    bool missing = false;
    for (const auto& c : cells)
      if (trim(c).empty()) missing = true;
    if (missing) {
      ++rejected;
      continue;
    }
    std::vector<double> row;
    row.reserve(width - 1);
    double label = 0.0;
    for (int j = 0; j < width; ++j) {
      const std::string cell = trim(cells[j]);
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str() || *end != '\0' || !std::isfinite(v))
        throw ParseError("load_csv: non-numeric cell `" + cell + "` at line " +
                         std::to_string(lineno));
      if (j == label_idx)
        label = v;
      else
        row.push_back(v);
    }
    rows.push_back(std::move(row));
    labels.push_back(label);
  }

  Dataset ds;
  ds.rows_rejected = rejected;
  ds.note = path;
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = static_cast<Eigen::Index>(width - 1);
  ds.x.resize(n, d);
  ds.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) ds.x(i, j) = rows[i][j];
    if (labels[i] == coding.negative)
      ds.y[i] = -1.0;
    else if (labels[i] == coding.positive)
      ds.y[i] = 1.0;
    else
      throw ParseError("load_csv: label value " + std::to_string(labels[i]) +
                       " matches neither coding value");
  }
  ds.binary_labels = true;
  ds.kinds = detect_column_kinds(ds.x);
  return ds;
}

void save_csv(const Dataset& ds, const std::string& path, const std::string& label_name) {
  std::ofstream out(path);
  if (!out) throw ParseError("save_csv: cannot open " + path);
  for (Eigen::Index j = 0; j < ds.x.cols(); ++j) out << "x" << j << ',';
  out << label_name << '\n';
  char buf[40];
  for (Eigen::Index i = 0; i < ds.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < ds.x.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.x(i, j));
      out << buf << ',';
    }
    std::snprintf(buf, sizeof(buf), "%.17g", ds.y[i]);
    out << buf << '\n';
  }
}

std::vector<ColumnKind> detect_column_kinds(const Eigen::MatrixXd& x) {
  std::vector<ColumnKind> kinds(x.cols(), ColumnKind::Continuous);
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    std::set<double> distinct;
    for (Eigen::Index i = 0; i < x.rows() && distinct.size() <= 2; ++i)
      distinct.insert(x(i, j));
    if (distinct.size() == 2) kinds[j] = ColumnKind::Binary;
  }
  return kinds;
}

Dataset preprocess_logistic(const Dataset& ds) {
  const Eigen::Index n = ds.x.rows();
  if (n < 2) throw DegenerateData("preprocess_logistic: need at least 2 rows");
  const bool has_intercept = ds.x.cols() > 0 && is_intercept_column(ds.x.col(0));
  const Eigen::Index d_in = ds.x.cols();
  const Eigen::Index first = has_intercept ? 1 : 0;

  Dataset out;
  out.y = ds.y;
  out.binary_labels = ds.binary_labels;
  out.rows_rejected = ds.rows_rejected;
  out.note = ds.note.empty() ? "preprocessed" : ds.note + " (preprocessed)";
  out.x.resize(n, d_in - first + 1);
  out.x.col(0).setOnes();
  out.kinds.assign(out.x.cols(), ColumnKind::Continuous);
  out.kinds[0] = ColumnKind::Binary;

  const auto kinds = detect_column_kinds(ds.x);
  for (Eigen::Index j = first; j < d_in; ++j) {
    const Eigen::VectorXd col = ds.x.col(j);
    const double mean = col.mean();
    const Eigen::Index jo = j - first + 1;
    if (kinds[j] == ColumnKind::Binary) {
      double lo = col.minCoeff(), hi = col.maxCoeff();
      out.x.col(jo) = (col.array() - mean) / (hi - lo);
      out.kinds[jo] = ColumnKind::Binary;
    } else {
      const double sd = std::sqrt((col.array() - mean).square().sum() / n);
      if (!(sd > 0.0))
        throw DegenerateData("preprocess_logistic: constant column " + std::to_string(j));
      out.x.col(jo) = 0.5 * (col.array() - mean) / sd;
    }
  }
  return out;
}

Dataset synth_logistic(int n, int d, RngStream& stream) {
  if (n < 1 || d < 1) throw Error("synth_logistic: need n, d >= 1");
  Eigen::MatrixXd toeplitz(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) toeplitz(i, j) = std::pow(0.3, std::abs(i - j));
  const Eigen::MatrixXd chol = cholesky(SymMatrix(toeplitz));

  RngStream xs = stream.fork(0x736c6f67u);
  Eigen::MatrixXd z = draw_standard_normal(xs, n, d);
  Dataset ds;
  ds.x = z * chol.transpose();
  ds.note = "synth_logistic";
  ds.binary_labels = true;

  RngStream bs = stream.fork(0x73626574u);
  Eigen::VectorXd beta = draw_standard_normal(bs, d, 1).col(0);
  const Eigen::VectorXd scores = ds.x * beta;
  RngStream us = stream.fork(0x73756e69u);
  const Eigen::VectorXd u = draw_uniform(us, n);
  ds.y.resize(n);
  for (int i = 0; i < n; ++i) {
    const double p = 1.0 / (1.0 + std::exp(-scores[i]));
    ds.y[i] = u[i] < p ? 1.0 : -1.0;
  }
  ds.kinds = detect_column_kinds(ds.x);
  return ds;
}

VarSelInstance synth_varsel(int n, int d, int sparsity, double noise_std, RngStream& stream) {
  if (n < 1 || d < 1 || sparsity < 0 || sparsity > d)
    throw Error("synth_varsel: invalid shape");
  VarSelInstance out;
  RngStream xs = stream.fork(0x76735f78u);
  out.data.x = draw_standard_normal(xs, n, d);
  out.data.note = "synth_varsel";
  out.data.binary_labels = false;
  out.data.kinds = detect_column_kinds(out.data.x);

  // Support chosen by a partial Fisher-Yates over coordinate indices.
  out.true_support = Eigen::VectorXd::Zero(d);
  std::vector<int> idx(d);
  for (int j = 0; j < d; ++j) idx[j] = j;
  RngStream ss = stream.fork(0x76735f73u);
  for (int j = 0; j < sparsity; ++j) {
    const int pick =
        j + std::min(d - 1 - j, static_cast<int>(ss.next_uniform() * (d - j)));
    std::swap(idx[j], idx[pick]);
    out.true_support[idx[j]] = 1.0;
  }

  RngStream bs = stream.fork(0x76735f62u);
  out.beta = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < d; ++j)
    if (out.true_support[j] > 0.5) {
      const double mag = 1.5 + ss.next_uniform();
      out.beta[j] = (bs.next_uniform() < 0.5 ? -1.0 : 1.0) * mag;
    }

  RngStream es = stream.fork(0x76735f65u);
  Eigen::VectorXd noise = draw_standard_normal(es, n, 1).col(0);
  out.data.y = out.data.x * out.beta + noise_std * noise;
  return out;
}

}  // namespace lsvi
