#pragma once

#include <Eigen/Core>

#include "lsvi/expfam.hpp"
#include "lsvi/lsvi.hpp"

namespace lsvi {

// Inversion-free LSVI for Gaussian families. The regression of f(mu + C z)
// on the orthonormal statistic t(z) needs no matrix inversion because
// E[t t^T] = I; the closed-form gamma <-> beta maps below carry the
// coefficients back to natural coordinates.

// Full-covariance statistic: (1, z, (z1^2-1)/sqrt(2), z1 z2, ..., z1 zd,
// (z2^2-1)/sqrt(2), ..., (zd^2-1)/sqrt(2)); length 1 + d + d(d+1)/2. The
// quadratic block follows the shared row-major upper-triangle enumeration.
void t_stat_fc(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd t_stat_fc(const Eigen::VectorXd& z);

// Mean-field statistic: (1, z, (z1^2-1)/sqrt(2), ..., (zd^2-1)/sqrt(2)).
void t_stat_mf(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd t_stat_mf(const Eigen::VectorXd& z);

// Regression coefficients in the orthonormal basis, gamma = E[t(Z) f(x(Z))],
// estimated as a plain average. `scale` is C (lower triangular, full
// covariance) or the vector of sigmas (mean-field).
struct GammaCoeffs {
  Eigen::VectorXd coeffs;  // (gamma0, gamma1, gamma2) flattened
  std::int64_t n_kept = 0;
  double dropped_fraction = 0.0;
  Eigen::MatrixXd z_samples;      // kept standard-normal draws (rows)
  Eigen::VectorXd f_values;       // kept target values
};

GammaCoeffs estimate_gamma_fc(const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol_lower,
                              const Target& target, std::int64_t n, RngStream& stream);
GammaCoeffs estimate_gamma_mf(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                              const Target& target, std::int64_t n, RngStream& stream);

// gamma -> natural parameters (full covariance). Assembles the symmetric
// Gamma from the half-vectorized quadratic block (diagonal / sqrt(2),
// off-diagonal / 2), conjugates by C^{-T} . C^{-1} and completes the linear
// and intercept rows; unvec(beta2) is exactly symmetric by construction.
Eigen::VectorXd gamma_to_beta_fc(const Eigen::VectorXd& gamma, const Eigen::VectorXd& mu,
                                 const Eigen::MatrixXd& chol_lower);
// Forward map: natural parameters -> gamma for the same (mu, C); the exact
// inverse of gamma_to_beta_fc. Used for diagnostics and tests.
Eigen::VectorXd beta_to_gamma_fc(const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                 const Eigen::MatrixXd& chol_lower);

Eigen::VectorXd gamma_to_beta_mf(const Eigen::VectorXd& gamma, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& sigma);
Eigen::VectorXd beta_to_gamma_mf(const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& sigma);

// LSVI-FC: full-covariance Gaussian loop. Momentum runs in natural
// coordinates; per-iteration cost is O(d^3 + N d^2) and no m x m matrix is
// formed or inverted.
RunResult run_fc(Target& target, const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                 std::int64_t n, std::int64_t t_iters, const StepsizePolicy& policy,
                 RngStream stream, const RunOptions& options = {});

// LSVI-MF: mean-field Gaussian loop, O(N d) per iteration.
RunResult run_mf(Target& target, const Eigen::VectorXd& mu0, const Eigen::VectorXd& sigma2_0,
                 std::int64_t n, std::int64_t t_iters, const StepsizePolicy& policy,
                 RngStream stream, const RunOptions& options = {});

}  // namespace lsvi
