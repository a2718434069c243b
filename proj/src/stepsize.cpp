#include "lsvi/stepsize.hpp"

#include <cmath>
#include <string>

namespace lsvi {

ResidualStats residual_stats_from(const Eigen::VectorXd& f_values,
                                  const Eigen::VectorXd& predictions) {
  if (f_values.size() != predictions.size() || f_values.size() == 0)
    throw DimensionMismatch("residual stats: need matching non-empty vectors");
  const Eigen::ArrayXd r = f_values.array() - predictions.array();
  ResidualStats out;
  out.mean = r.mean();
  out.std_dev = std::sqrt((r - out.mean).square().mean());
  return out;
}

StepsizePolicy StepsizePolicy::fixed(double eps) {
  StepsizePolicy p;
  p.base = Base::Fixed;
  p.eps_bar = eps;
  p.validate();
  return p;
}

StepsizePolicy StepsizePolicy::linear(double L, double alpha) {
  StepsizePolicy p;
  p.base = Base::Linear;
  p.L = L;
  p.alpha = alpha;
  p.validate();
  return p;
}

StepsizePolicy StepsizePolicy::with_variance_control(double u, StepsizePolicy base) {
  base.variance_control = true;
  base.u = u;
  base.validate();
  return base;
}

void StepsizePolicy::validate() const {
  if (base == Base::Fixed && !(eps_bar > 0.0 && eps_bar <= 1.0))
    throw ConfigError("stepsize: fixed epsilon must be in (0, 1]");
  if (base == Base::Linear && !(L >= 1.0))
    throw ConfigError("stepsize: linear schedule needs L >= 1 so eps_0 <= 1");
  if (base == Base::Linear && !(alpha >= 0.0))
    throw ConfigError("stepsize: linear schedule needs alpha >= 0");
  if (variance_control && !(u > 0.0)) throw ConfigError("stepsize: u must be positive");
  if (max_halvings < 1) throw ConfigError("stepsize: max_halvings must be >= 1");
}

double base_epsilon(const StepsizePolicy& policy, std::int64_t t) {
  if (policy.base == StepsizePolicy::Base::Fixed) return policy.eps_bar;
  const double eps = 1.0 / (policy.L + policy.alpha * static_cast<double>(t));
  return std::min(1.0, eps);
}

StepResult apply_stepsize(const StepsizePolicy& policy, std::int64_t t,
                          const Eigen::VectorXd& eta, const Eigen::VectorXd& eta_prime,
                          const Eigen::VectorXd& f_values,
                          const Eigen::VectorXd& ols_predictions,
                          const std::function<bool(const Eigen::VectorXd&)>& in_domain) {
  if (eta.size() != eta_prime.size())
    throw DimensionMismatch("apply_stepsize: eta and eta' lengths differ");

  StepResult out;
  out.residuals = residual_stats_from(f_values, ols_predictions);

  double eps = base_epsilon(policy, t);
  auto candidate = [&](double e) -> Eigen::VectorXd { return e * eta_prime + (1.0 - e) * eta; };

  Eigen::VectorXd next = candidate(eps);
  while (!in_domain(next)) {
    if (out.halvings >= policy.max_halvings)
      throw StepsizeCollapse("stepsize: no admissible parameter after " +
                             std::to_string(policy.max_halvings) + " halvings");
    eps *= 0.5;
    ++out.halvings;
    next = candidate(eps);
  }

  if (policy.variance_control && out.residuals.std_dev >= policy.u) {
    out.variance_guard_fired = true;
    const double rescaled = std::min(eps, policy.u / out.residuals.std_dev);
    if (rescaled < eps) {
      eps = rescaled;
      next = candidate(eps);
      // The domain is open and eta is interior, so shrinking eps keeps
      // membership for our (convex-domain) families; verified regardless.
      while (!in_domain(next)) {
        if (out.halvings >= policy.max_halvings)
          throw StepsizeCollapse("stepsize: no admissible parameter after variance rescale");
        eps *= 0.5;
        ++out.halvings;
        next = candidate(eps);
      }
    }
  }

  out.epsilon = eps;
  out.eta_next = std::move(next);
  return out;
}

}  // namespace lsvi
