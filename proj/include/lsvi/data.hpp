#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "lsvi/rng.hpp"

namespace lsvi {

enum class ColumnKind { Binary, Continuous };

struct Dataset {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  bool binary_labels = false;  // y in {-1, +1} vs continuous responses
  std::vector<ColumnKind> kinds;
  std::string note;
  int rows_rejected = 0;  // rows dropped for missing fields
};

// Maps label cells onto {-1, +1}.
struct LabelCoding {
  double negative = 0.0;
  double positive = 1.0;
};

// Delimited text with a header row; `label_column` is a header name. Rows
// with empty fields are rejected (counted); non-numeric cells raise
// ParseError with their line number.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const LabelCoding& coding = {});

void save_csv(const Dataset& ds, const std::string& path, const std::string& label_name = "y");

// Detects column kinds (binary = exactly two distinct values).
std::vector<ColumnKind> detect_column_kinds(const Eigen::MatrixXd& x);

// Centers continuous columns to std 0.5, maps binary columns to mean 0 and
// range 1, and prepends an intercept column of ones (kept as-is when the
// data already starts with one). Idempotent. Throws DegenerateData on a
// constant non-intercept column.
Dataset preprocess_logistic(const Dataset& ds);

// X ~ N(0, Toeplitz(0.3^|i-j|)), beta* ~ N(0, I), labels from the logistic
// model. Features only; preprocessing adds the intercept.
Dataset synth_logistic(int n, int d, RngStream& stream);

struct VarSelInstance {
  Dataset data;                  // continuous responses
  Eigen::VectorXd true_support;  // gamma* in {0,1}^d
  Eigen::VectorXd beta;          // nonzero only on the support
};

VarSelInstance synth_varsel(int n, int d, int sparsity, double noise_std, RngStream& stream);

}  // namespace lsvi
