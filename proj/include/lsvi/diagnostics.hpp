#pragma once

#include <Eigen/Core>

#include "lsvi/expfam.hpp"
#include "lsvi/stepsize.hpp"
#include "lsvi/target.hpp"

namespace lsvi {

// Monte-Carlo estimate of E_qbar[log qbar_eta(X) - f(X)], i.e. the KL
// divergence to the normalized target shifted by the unknown log-partition
// constant of pi.
struct KlEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t n_eval = 0;
};

KlEstimate kl_up_to_const(const Family& family, const Eigen::VectorXd& eta,
                          const Target& target, std::int64_t n_eval, RngStream stream);

// Same estimator on caller-supplied draws and target values (one value per
// retained sample); used for cheap in-loop traces.
KlEstimate kl_from_samples(const Family& family, const Eigen::VectorXd& eta,
                           const Eigen::MatrixXd& samples, const Eigen::VectorXd& f_values);

// Residual statistics of f - eta^T s at the given parameter.
ResidualStats residual_stats(const Family& family, const Eigen::VectorXd& eta,
                             const Eigen::MatrixXd& samples, const Eigen::VectorXd& f_values);

// Fraction of rows with sign(x_i^T mu) != y_i; sign(0) counts as +1.
double misclassification_rate(const Eigen::VectorXd& mu, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& y);

}  // namespace lsvi
