#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lsvi {

// One row per iteration. `params` is the canonical snapshot of the updated
// parameter (the state after iteration t); `kl` is the divergence estimate of
// the pre-update state, up to the unknown log-partition constant.
struct TraceRow {
  std::int64_t t = 0;
  double epsilon = 0.0;
  double kl_estimate = 0.0;
  double kl_std_error = 0.0;
  double residual_std = 0.0;
  int halvings = 0;
  std::int64_t elapsed_ns = 0;
  double dropped_fraction = 0.0;  // share of -inf target draws removed
  Eigen::VectorXd params;
};

struct IterationTrace {
  std::vector<std::string> param_labels;
  std::vector<TraceRow> rows;

  // CSV with header `t,epsilon,kl_estimate,residual_std,halvings,elapsed_ns,
  // <param labels...>`; doubles carry 17 significant digits so parsing the
  // file reproduces them exactly.
  std::string to_csv() const;
  // Same document with the elapsed_ns field zeroed; wall time is the one
  // column that legitimately differs between reruns.
  std::string to_csv_without_timing() const;
};

IterationTrace parse_trace_csv(const std::string& text);

}  // namespace lsvi
