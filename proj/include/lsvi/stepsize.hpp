#pragma once

#include <functional>
#include <limits>

#include <Eigen/Core>

#include "lsvi/errors.hpp"

namespace lsvi {

// Residual statistics of f(X_i) - eta'^T s(X_i) over the retained samples,
// where eta' is the regression output of the current iteration. The
// standard deviation is centred.
struct ResidualStats {
  double mean = 0.0;
  double std_dev = 0.0;
};

ResidualStats residual_stats_from(const Eigen::VectorXd& f_values,
                                  const Eigen::VectorXd& predictions);

// Step-size schedule: fixed eps, linearly decreasing 1/(L + alpha t), with an
// optional variance-control guard `eps <- min(eps, u / vhat)` plus domain
// backtracking by halving.
struct StepsizePolicy {
  enum class Base { Fixed, Linear };

  Base base = Base::Fixed;
  double eps_bar = 1.0;  // Fixed
  double L = 1.0;        // Linear: eps_t = 1 / (L + alpha t)
  double alpha = 0.0;
  bool variance_control = false;
  double u = std::numeric_limits<double>::infinity();
  int max_halvings = 60;

  static StepsizePolicy fixed(double eps);
  static StepsizePolicy linear(double L, double alpha);
  static StepsizePolicy with_variance_control(double u, StepsizePolicy base);

  void validate() const;
};

// Schedule value before backtracking/variance control; always in (0, 1].
double base_epsilon(const StepsizePolicy& policy, std::int64_t t);

struct StepResult {
  double epsilon = 0.0;
  Eigen::VectorXd eta_next;
  ResidualStats residuals;  // of f - eta'^T s, the regression-output residuals
  int halvings = 0;
  bool variance_guard_fired = false;
};

// One Algorithm-4 style step: halve eps until eps*eta' + (1-eps)*eta is in
// the domain, then apply the variance guard once using the residual std of
// the regression output eta' on the same samples (for the exact OLS these are
// the residuals whose std the tempered step scales linearly by eps), and
// re-verify membership. Throws StepsizeCollapse after max_halvings.
StepResult apply_stepsize(const StepsizePolicy& policy, std::int64_t t,
                          const Eigen::VectorXd& eta, const Eigen::VectorXd& eta_prime,
                          const Eigen::VectorXd& f_values,
                          const Eigen::VectorXd& ols_predictions,
                          const std::function<bool(const Eigen::VectorXd&)>& in_domain);

}  // namespace lsvi
