#pragma once

#include <array>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "lsvi/target.hpp"

namespace lsvi {

// log(1 / (1 + exp(-u))), overflow-free on both tails.
double log_sigmoid(double u);

// ---------------------------------------------------------------------------
// Bayesian logistic regression
// ---------------------------------------------------------------------------

// log pi(beta) = -1/2 sum_j beta_j^2 / priorVar_j + sum_i log F(y_i x_i^T beta),
// prior normalizing constant dropped.
class LogisticTarget final : public Target {
 public:
  LogisticTarget(Eigen::MatrixXd x, Eigen::VectorXd y, Eigen::VectorXd prior_variances);

  int dim() const override { return static_cast<int>(x_.cols()); }
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& beta,
                     RngStream noise) const override;
  // Chunked score matrix with vectorized logsigmoid.
  void log_density_batch(const Eigen::MatrixXd& betas, const RngStream& noise_base,
                         Eigen::VectorXd& out) const override;

  double log_posterior(const Eigen::Ref<const Eigen::VectorXd>& beta) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& beta) const;

  // Design with each row scaled by its label, so the log-likelihood is
  // sum_i logsigmoid(row_i . beta).
  const Eigen::MatrixXd& signed_design() const { return x_; }
  const Eigen::VectorXd& labels() const { return y_; }

 private:
  Eigen::MatrixXd x_;  // n x d, rows scaled by y_i (so likelihood = sum logsigmoid)
  Eigen::VectorXd y_;
  Eigen::VectorXd prior_var_;
};

// Unbiased subsampled estimator: prior + (n/P) * sum over P with-replacement
// draws of per-datum log-likelihoods. The batch is redrawn once per
// iteration via begin_iteration.
class SubsampledLogisticTarget final : public Target {
 public:
  SubsampledLogisticTarget(Eigen::MatrixXd x, Eigen::VectorXd y,
                           Eigen::VectorXd prior_variances, int batch_size);

  int dim() const override { return static_cast<int>(x_.cols()); }
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& beta,
                     RngStream noise) const override;
  void begin_iteration(std::uint64_t t, RngStream stream) override;
  bool is_noisy() const override { return true; }

  // Test hook: force the batch to the identity permutation (P must equal n).
  void use_identity_batch();
  const std::vector<int>& batch() const { return batch_; }

 private:
  Eigen::MatrixXd x_;  // rows scaled by y_i
  Eigen::VectorXd prior_var_;
  int batch_size_;
  std::vector<int> batch_;
};

// ---------------------------------------------------------------------------
// Bayesian variable selection (closed-form marginal posterior over gamma)
// ---------------------------------------------------------------------------

struct VarSelHyper {
  double w = 4.0;
  double lambda = 1.0;
  double v2 = 10.0;
};

// w = 4, lambda = residual variance of the saturated linear model, v^2 = 10/lambda.
VarSelHyper hyperparams_from_data(const Eigen::MatrixXd& z, const Eigen::VectorXd& y);

class VarSelTarget final : public Target {
 public:
  VarSelTarget(Eigen::MatrixXd z, Eigen::VectorXd y, VarSelHyper hyper);

  int dim() const override { return static_cast<int>(gram_.rows()); }
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& gamma,
                     RngStream noise) const override;

  double log_posterior(const Eigen::Ref<const Eigen::VectorXd>& gamma) const;
  const VarSelHyper& hyper() const { return hyper_; }

 private:
  Eigen::MatrixXd gram_;  // Z^T Z
  Eigen::VectorXd zty_;   // Z^T y
  double yty_;
  VarSelHyper hyper_;
};

// ---------------------------------------------------------------------------
// Symmetric alpha-stable sampling (Chambers-Mallows-Stuck)
// ---------------------------------------------------------------------------

// n draws from the symmetric stable law S(alpha, skew 0, scale, location 0).
// alpha = 2 reduces to N(0, 2 scale^2); alpha = 1 to Cauchy(0, scale).
Eigen::VectorXd levy_stable_sample(double alpha, double scale, RngStream& stream, int n);

// ---------------------------------------------------------------------------
// Toad displacement simulator and Bayesian synthetic likelihood
// ---------------------------------------------------------------------------

struct ToadConfig {
  int n_toads = 66;
  int n_days = 63;
  int replicates = 100;          // simulator draws per likelihood evaluation
  double shrinkage = 0.5;        // Warton correlation shrinkage weight
  double return_threshold = 10.0;
  std::array<int, 4> lags{1, 2, 4, 8};
};

struct Theta {
  double alpha = 1.7;   // in [1, 2]
  double delta = 35.0;  // in [0, 100]
  double p0 = 0.6;      // in [0, 0.9]
};

inline constexpr double kThetaLo[3] = {1.0, 0.0, 0.0};
inline constexpr double kThetaHi[3] = {2.0, 100.0, 0.9};

// Positions Y (toads x days). Day one is the first overnight displacement;
// afterwards a Bernoulli(p0) flag keeps the new site or returns to a
// uniformly chosen past one.
Eigen::MatrixXd toad_simulate(const Theta& theta, int n_toads, int n_days, RngStream& stream);

// 12 statistics per lag: count of displacements <= threshold, median of those
// above, and the 10 log-differences of adjacent deciles (p = 0, .1, ..., 1) of
// those above. Degenerate when fewer than 2 displacements exceed the
// threshold at some lag, or when tied quantiles make a log-difference -inf.
struct ToadSummary {
  Eigen::VectorXd values;  // length 4 * 12 = 48
  bool degenerate = false;
};

ToadSummary toad_summaries(const Eigen::MatrixXd& y, const std::array<int, 4>& lags,
                           double threshold);

// Linear-interpolation quantile with inclusive endpoints (p=0 -> min,
// p=1 -> max) on sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);

// Synthetic-likelihood posterior over theta: simulate P replicate datasets,
// fit a Gaussian to their summaries with Warton shrinkage
// Sigma = D^{1/2} (g C + (1-g) I) D^{1/2}, and score the observed summary.
// Flat prior over the theta box; outside the box the value is -inf, as is
// any degenerate summary batch.
class BslToadTarget final : public Target {
 public:
  BslToadTarget(ToadConfig config, Eigen::VectorXd s_obs);
  // Generates the observed data in-process from theta_star.
  static BslToadTarget from_simulation(ToadConfig config, const Theta& theta_star,
                                       RngStream obs_stream);

  int dim() const override { return 3; }
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& theta,
                     RngStream noise) const override;
  bool is_noisy() const override { return true; }

  const Eigen::VectorXd& observed_summary() const { return s_obs_; }
  const ToadConfig& config() const { return config_; }

  // Gaussian synthetic-likelihood score at theta (no prior), using the given
  // noise stream for the replicate simulations.
  double synthetic_loglik(const Theta& theta, RngStream noise) const;

 private:
  ToadConfig config_;
  Eigen::VectorXd s_obs_;
};

// Same posterior on logit-transformed coordinates xi = logit((theta-a)/b),
// with the log-Jacobian of the inverse transform added; unconstrained.
class BslToadLogitTarget final : public Target {
 public:
  BslToadLogitTarget(ToadConfig config, Eigen::VectorXd s_obs);
  static BslToadLogitTarget from_simulation(ToadConfig config, const Theta& theta_star,
                                            RngStream obs_stream);

  int dim() const override { return 3; }
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& xi,
                     RngStream noise) const override;
  bool is_noisy() const override { return true; }

  const BslToadTarget& base() const { return base_; }

 private:
  BslToadTarget base_;
};

// Box reparameterization helpers (boxes given as lo/hi vectors).
Eigen::VectorXd logit_reparam(const Eigen::VectorXd& theta, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi);
Eigen::VectorXd logit_reparam_inverse(const Eigen::VectorXd& xi, const Eigen::VectorXd& lo,
                                      const Eigen::VectorXd& hi);
double logit_reparam_log_jacobian(const Eigen::VectorXd& xi, const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi);

}  // namespace lsvi
