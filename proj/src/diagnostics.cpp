#include "lsvi/diagnostics.hpp"

#include <cmath>

#include "lsvi/parallel.hpp"

namespace lsvi {

KlEstimate kl_from_samples(const Family& family, const Eigen::VectorXd& eta,
                           const Eigen::MatrixXd& samples, const Eigen::VectorXd& f_values) {
  const std::int64_t n = samples.rows();
  if (n != f_values.size() || n == 0)
    throw DimensionMismatch("kl_from_samples: need matching non-empty inputs");
  Eigen::VectorXd diff;
  family.log_density_batch(eta, samples, diff);
  diff -= f_values;
  KlEstimate out;
  out.n_eval = n;
  out.value = diff.mean();
  out.std_error = n > 1 ? std::sqrt((diff.array() - out.value).square().sum() /
                                    (static_cast<double>(n) * (n - 1)))
                        : 0.0;
  return out;
}

KlEstimate kl_up_to_const(const Family& family, const Eigen::VectorXd& eta,
                          const Target& target, std::int64_t n_eval, RngStream stream) {
  family.check_eta(eta);
  if (n_eval < 1) throw Error("kl_up_to_const: need N_eval >= 1");
  RngStream sample_stream = stream.fork(0x6b6c6576u);
  RngStream noise_stream = stream.fork(0x6b6c6e6fu);
  const Eigen::MatrixXd x = family.sample(eta, static_cast<int>(n_eval), sample_stream);
  Eigen::VectorXd f;
  target.log_density_batch(x, noise_stream, f);
  std::int64_t kept = 0;
  Eigen::MatrixXd xk(n_eval, x.cols());
  Eigen::VectorXd fk(n_eval);
  for (std::int64_t i = 0; i < n_eval; ++i) {
    if (std::isnan(f[i]) || f[i] == HUGE_VAL)
      throw TargetNotFinite("kl_up_to_const: target returned NaN or +inf");
    if (f[i] == -HUGE_VAL) continue;  // dropped; conditional-law estimate
    xk.row(kept) = x.row(i);
    fk[kept] = f[i];
    ++kept;
  }
  if (kept == 0) throw TargetNotFinite("kl_up_to_const: target was -inf on every draw");
  return kl_from_samples(family, eta, xk.topRows(kept), fk.head(kept));
}

ResidualStats residual_stats(const Family& family, const Eigen::VectorXd& eta,
                             const Eigen::MatrixXd& samples, const Eigen::VectorXd& f_values) {
  const std::int64_t n = samples.rows();
  if (n != f_values.size() || n == 0)
    throw DimensionMismatch("residual_stats: need matching non-empty inputs");
  Eigen::VectorXd preds(n);
  const int m = family.statistic_size();
  parallel_for(n, [&](std::ptrdiff_t i) {
    Eigen::VectorXd s(m);
    family.suff_stat(samples.row(i).transpose(), s);
    preds[i] = s.dot(eta);
  });
  return residual_stats_from(f_values, preds);
}

double misclassification_rate(const Eigen::VectorXd& mu, const Eigen::MatrixXd& x,
                              const Eigen::VectorXd& y) {
  if (x.cols() != mu.size() || x.rows() != y.size())
    throw DimensionMismatch("misclassification_rate: dimension mismatch");
  if (x.rows() == 0) return 0.0;
  const Eigen::VectorXd scores = x * mu;
  std::int64_t wrong = 0;
  for (std::int64_t i = 0; i < scores.size(); ++i) {
    const double predicted = scores[i] >= 0.0 ? 1.0 : -1.0;
    if (predicted != y[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(x.rows());
}

}  // namespace lsvi
