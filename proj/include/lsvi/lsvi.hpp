#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Core>

#include "lsvi/expfam.hpp"
#include "lsvi/linalg.hpp"
#include "lsvi/stepsize.hpp"
#include "lsvi/target.hpp"
#include "lsvi/trace.hpp"

namespace lsvi {

// Per-iteration Monte-Carlo regression state: F = (1/N) sum s(X_i) s(X_i)^T,
// z = (1/N) sum f(X_i) s(X_i), both over the same retained draws. Draws where
// the target returned -inf are dropped and N renormalized; NaN or +inf raise
// TargetNotFinite.
struct RegressionEstimate {
  SymMatrix f_hat;
  Eigen::VectorXd z_hat;
  std::int64_t n_requested = 0;
  std::int64_t n_kept = 0;
  double dropped_fraction = 0.0;

  Eigen::MatrixXd samples;       // kept draws, one per row
  Eigen::MatrixXd stats_t;       // m x n_kept, s(X_i) in column i; empty above cap
  Eigen::VectorXd f_values;      // kept target values

  // eta^T s(X_i) for every kept sample; uses stats_t when retained, else
  // recomputes rows on demand.
  Eigen::VectorXd predictions(const Family& family, const Eigen::VectorXd& eta) const;
};

// Retain s(X_i) only while N*m stays within this many doubles.
constexpr std::int64_t kStatStorageCap = 100'000'000;

RegressionEstimate estimate_regression(const Family& family, const Eigen::VectorXd& eta,
                                       const Target& target, std::int64_t n,
                                       RngStream& stream);

// Empirical LSVI map: the OLS coefficients of f(X) on s(X). Retries once with
// ridge = 1e-10 tr(F)/m on a singular design, then propagates SingularDesign.
Eigen::VectorXd lsvi_ols(const RegressionEstimate& est);

// eps * eta' + (1 - eps) * eta.
Eigen::VectorXd momentum_update(const Eigen::VectorXd& eta, const Eigen::VectorXd& eta_prime,
                                double eps);

enum class KlMode {
  Fresh,  // fresh evaluation draws, N_eval = N (default; avoids optimistic bias)
  Reuse,  // reuse the fitting draws (cheap in-loop traces)
  Off,
};

struct RunOptions {
  KlMode kl_mode = KlMode::Fresh;
  int kl_every = 1;  // evaluate the KL diagnostic every k-th iteration
  // Two independent sample sets for F and z (the analysis setting); the
  // default shares one set.
  bool split_samples = false;
  // Optional early stop: KL change < tol over a 10-iteration window.
  double early_stop_tol = 0.0;  // 0 disables
  int early_stop_window = 10;
};

struct RunResult {
  Eigen::VectorXd eta;
  IterationTrace trace;
};

// Generic LSVI: T iterations of sample -> OLS -> stepsize -> momentum.
// Every recorded iterate is inside the natural domain.
RunResult run_generic(const Family& family, Target& target, const Eigen::VectorXd& eta0,
                      std::int64_t n, std::int64_t t_iters, const StepsizePolicy& policy,
                      RngStream stream, const RunOptions& options = {});

}  // namespace lsvi
