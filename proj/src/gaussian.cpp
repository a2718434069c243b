#include "lsvi/gaussian.hpp"

#include <chrono>
#include <cmath>

#include "lsvi/diagnostics.hpp"
#include "lsvi/parallel.hpp"

namespace lsvi {

namespace {

constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;

int fc_stat_size(int d) { return 1 + d + d * (d + 1) / 2; }

// gamma^T t(z_i) for every row of z; chunked so no n x m matrix is kept.
Eigen::VectorXd gamma_predictions(const Eigen::VectorXd& gamma, const Eigen::MatrixXd& z,
                                  bool full_cov) {
  const std::int64_t n = z.rows();
  Eigen::VectorXd out(n);
  parallel_for_chunks(n, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    Eigen::VectorXd t(gamma.size());
    for (std::ptrdiff_t i = b; i < e; ++i) {
      if (full_cov)
        t_stat_fc(z.row(i).transpose(), t);
      else
        t_stat_mf(z.row(i).transpose(), t);
      out[i] = gamma.dot(t);
    }
  });
  return out;
}

struct GammaAccum {
  Eigen::VectorXd gamma;
  std::int64_t kept = 0;
};

// Shared body of the two estimators: draw Z, evaluate f at x(Z), drop -inf
// draws, average t(Z) f.
GammaCoeffs estimate_gamma_impl(int d, int stat_size, bool full_cov, const Target& target,
                                std::int64_t n, RngStream& stream,
                                const std::function<void(const Eigen::MatrixXd&,
                                                         Eigen::MatrixXd&)>& to_x) {
  if (n < 1) throw Error("estimate_gamma: need N >= 1");
  RngStream sample_stream = stream.fork(0x67616d73u);
  RngStream noise_stream = stream.fork(0x67616d6eu);

  Eigen::MatrixXd z = draw_standard_normal(sample_stream, static_cast<int>(n), d);
  Eigen::MatrixXd x;
  to_x(z, x);

  Eigen::VectorXd f;
  target.log_density_batch(x, noise_stream, f);

  GammaCoeffs out;
  out.z_samples.resize(n, d);
  out.f_values.resize(n);
  std::int64_t kept = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    if (std::isnan(f[i]) || f[i] == HUGE_VAL)
      throw TargetNotFinite("estimate_gamma: target returned NaN or +inf");
    if (f[i] == -HUGE_VAL) continue;
    out.z_samples.row(kept) = z.row(i);
    out.f_values[kept] = f[i];
    ++kept;
  }
  if (kept == 0) throw TargetNotFinite("estimate_gamma: target was -inf on every draw");
  out.z_samples.conservativeResize(kept, d);
  out.f_values.conservativeResize(kept);
  out.n_kept = kept;
  out.dropped_fraction = 1.0 - static_cast<double>(kept) / static_cast<double>(n);

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(stat_size);
  Eigen::VectorXd t(stat_size);
  for (std::int64_t i = 0; i < kept; ++i) {
    if (full_cov)
      t_stat_fc(out.z_samples.row(i).transpose(), t);
    else
      t_stat_mf(out.z_samples.row(i).transpose(), t);
    acc.noalias() += t * out.f_values[i];
  }
  out.coeffs = acc / static_cast<double>(kept);
  return out;
}

}  // namespace

void t_stat_fc(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::Ref<Eigen::VectorXd> out) {
  const int d = static_cast<int>(z.size());
  if (out.size() != fc_stat_size(d)) throw DimensionMismatch("t_stat_fc: bad output size");
  out[0] = 1.0;
  out.segment(1, d) = z;
  double* quad = out.data() + 1 + d;
  for_each_upper(d, [&](int i, int j, int idx) {
    quad[idx] = i == j ? (z[i] * z[i] - 1.0) / kSqrt2 : z[i] * z[j];
  });
}

Eigen::VectorXd t_stat_fc(const Eigen::VectorXd& z) {
  Eigen::VectorXd out(fc_stat_size(static_cast<int>(z.size())));
  t_stat_fc(z, out);
  return out;
}

void t_stat_mf(const Eigen::Ref<const Eigen::VectorXd>& z, Eigen::Ref<Eigen::VectorXd> out) {
  const int d = static_cast<int>(z.size());
  if (out.size() != 1 + 2 * d) throw DimensionMismatch("t_stat_mf: bad output size");
  out[0] = 1.0;
  out.segment(1, d) = z;
  out.segment(1 + d, d) = (z.array().square() - 1.0) / kSqrt2;
}

Eigen::VectorXd t_stat_mf(const Eigen::VectorXd& z) {
  Eigen::VectorXd out(1 + 2 * static_cast<int>(z.size()));
  t_stat_mf(z, out);
  return out;
}

GammaCoeffs estimate_gamma_fc(const Eigen::VectorXd& mu, const Eigen::MatrixXd& chol_lower,
                              const Target& target, std::int64_t n, RngStream& stream) {
  const int d = static_cast<int>(mu.size());
  return estimate_gamma_impl(d, fc_stat_size(d), true, target, n, stream,
                             [&](const Eigen::MatrixXd& z, Eigen::MatrixXd& x) {
                               x.noalias() = z * chol_lower.transpose();
                               x.rowwise() += mu.transpose();
                             });
}

GammaCoeffs estimate_gamma_mf(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma,
                              const Target& target, std::int64_t n, RngStream& stream) {
  const int d = static_cast<int>(mu.size());
  return estimate_gamma_impl(d, 1 + 2 * d, false, target, n, stream,
                             [&](const Eigen::MatrixXd& z, Eigen::MatrixXd& x) {
                               x = z;
                               x.array().rowwise() *= sigma.transpose().array();
                               x.rowwise() += mu.transpose();
                             });
}

Eigen::VectorXd gamma_to_beta_fc(const Eigen::VectorXd& gamma, const Eigen::VectorXd& mu,
                                 const Eigen::MatrixXd& chol_lower) {
  const int d = static_cast<int>(mu.size());
  if (gamma.size() != fc_stat_size(d) || chol_lower.rows() != d || chol_lower.cols() != d)
    throw DimensionMismatch("gamma_to_beta_fc: bad sizes");

  Eigen::MatrixXd big_gamma(d, d);
  const double* quad = gamma.data() + 1 + d;
  for_each_upper(d, [&](int i, int j, int idx) {
    const double v = i == j ? quad[idx] / kSqrt2 : quad[idx] / 2.0;
    big_gamma(i, j) = v;
    big_gamma(j, i) = v;
  });

  // B = C^{-T} Gamma C^{-1}, via two triangular solves; exact symmetrization
  // keeps unvec(beta2) symmetric despite rounding.
  const auto upper = chol_lower.transpose().triangularView<Eigen::Upper>();
  Eigen::MatrixXd y = upper.solve(big_gamma);
  Eigen::MatrixXd b = upper.solve(y.transpose()).transpose();
  b = 0.5 * (b + b.transpose()).eval();

  Eigen::VectorXd beta(1 + d + d * d);
  beta.segment(1 + d, d * d) = vec(b);
  const Eigen::VectorXd beta1 = upper.solve(gamma.segment(1, d)) - 2.0 * (b * mu);
  beta.segment(1, d) = beta1;
  beta[0] = gamma[0] - big_gamma.trace() - beta1.dot(mu) - mu.dot(b * mu);
  return beta;
}

Eigen::VectorXd beta_to_gamma_fc(const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                 const Eigen::MatrixXd& chol_lower) {
  const int d = static_cast<int>(mu.size());
  if (eta.size() != 1 + d + d * d || chol_lower.rows() != d || chol_lower.cols() != d)
    throw DimensionMismatch("beta_to_gamma_fc: bad sizes");
  const Eigen::MatrixXd m0 = unvec(eta.segment(1 + d, d * d), d);
  const Eigen::MatrixXd m = 0.5 * (m0 + m0.transpose());
  // Gamma = unvec((C (x) C)^T eta2) = C^T M C
  const Eigen::MatrixXd big_gamma = chol_lower.transpose() * m * chol_lower;

  Eigen::VectorXd gamma(fc_stat_size(d));
  gamma[0] = eta[0] + eta.segment(1, d).dot(mu) + mu.dot(m * mu) + big_gamma.trace();
  gamma.segment(1, d) =
      chol_lower.transpose() * (eta.segment(1, d) + 2.0 * (m * mu));
  double* quad = gamma.data() + 1 + d;
  for_each_upper(d, [&](int i, int j, int idx) {
    quad[idx] = i == j ? kSqrt2 * big_gamma(i, i) : 2.0 * big_gamma(i, j);
  });
  return gamma;
}

Eigen::VectorXd gamma_to_beta_mf(const Eigen::VectorXd& gamma, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& sigma) {
  const int d = static_cast<int>(mu.size());
  if (gamma.size() != 1 + 2 * d || sigma.size() != d)
    throw DimensionMismatch("gamma_to_beta_mf: bad sizes");
  const auto g1 = gamma.segment(1, d).array();
  const auto g2 = gamma.segment(1 + d, d).array();
  const auto s = sigma.array();
  Eigen::VectorXd beta(1 + 2 * d);
  const Eigen::ArrayXd beta2 = g2 / (kSqrt2 * s.square());
  const Eigen::ArrayXd beta1 = g1 / s - 2.0 * beta2 * mu.array();
  beta.segment(1, d) = beta1.matrix();
  beta.segment(1 + d, d) = beta2.matrix();
  beta[0] = gamma[0] - (beta1 * mu.array()).sum() -
            (beta2 * (mu.array().square() + s.square())).sum();
  return beta;
}

Eigen::VectorXd beta_to_gamma_mf(const Eigen::VectorXd& eta, const Eigen::VectorXd& mu,
                                 const Eigen::VectorXd& sigma) {
  const int d = static_cast<int>(mu.size());
  if (eta.size() != 1 + 2 * d || sigma.size() != d)
    throw DimensionMismatch("beta_to_gamma_mf: bad sizes");
  const auto e1 = eta.segment(1, d).array();
  const auto e2 = eta.segment(1 + d, d).array();
  const auto s = sigma.array();
  Eigen::VectorXd gamma(1 + 2 * d);
  gamma[0] = eta[0] + (e1 * mu.array()).sum() +
             (e2 * (mu.array().square() + s.square())).sum();
  gamma.segment(1, d) = (e1 * s + 2.0 * e2 * mu.array() * s).matrix();
  gamma.segment(1 + d, d) = (kSqrt2 * e2 * s.square()).matrix();
  return gamma;
}

RunResult run_fc(Target& target, const Eigen::VectorXd& mu0, const Eigen::MatrixXd& sigma0,
                 std::int64_t n, std::int64_t t_iters, const StepsizePolicy& policy,
                 RngStream stream, const RunOptions& options) {
  const int d = static_cast<int>(mu0.size());
  if (t_iters < 1) throw Error("run_fc: need T >= 1");
  policy.validate();
  FullCovGaussian family(d);

  RunResult out;
  out.trace.param_labels = family.canonical_labels();
  out.trace.rows.reserve(t_iters);

  Eigen::VectorXd mu = mu0;
  Eigen::MatrixXd sigma = sigma0;
  out.eta = family.eta_from_mean_cov(mu, sigma);
  const auto domain_test = [&](const Eigen::VectorXd& e) { return family.in_domain(e); };

  for (std::int64_t t = 0; t < t_iters; ++t) {
    const auto started = std::chrono::steady_clock::now();
    RngStream iter_stream = stream.substream(4 * static_cast<std::uint64_t>(t));
    RngStream kl_stream = stream.substream(4 * static_cast<std::uint64_t>(t) + 2);
    target.begin_iteration(static_cast<std::uint64_t>(t),
                           stream.substream(4 * static_cast<std::uint64_t>(t) + 3));

    const Eigen::MatrixXd chol_lower = cholesky(SymMatrix(sigma));
    GammaCoeffs gamma = estimate_gamma_fc(mu, chol_lower, target, n, iter_stream);
    const Eigen::VectorXd eta_prime = gamma_to_beta_fc(gamma.coeffs, mu, chol_lower);
    const Eigen::VectorXd preds = gamma_predictions(gamma.coeffs, gamma.z_samples, true);

    StepResult step =
        apply_stepsize(policy, t, out.eta, eta_prime, gamma.f_values, preds, domain_test);

    TraceRow row;
    row.t = t;
    row.epsilon = step.epsilon;
    row.halvings = step.halvings;
    row.residual_std = step.residuals.std_dev;
    row.dropped_fraction = gamma.dropped_fraction;
    const bool want_kl = options.kl_mode != KlMode::Off &&
                         (options.kl_every <= 1 || t % options.kl_every == 0 ||
                          t == t_iters - 1);
    if (want_kl) {
      if (options.kl_mode == KlMode::Fresh) {
        const KlEstimate kl = kl_up_to_const(family, out.eta, target, n, kl_stream);
        row.kl_estimate = kl.value;
        row.kl_std_error = kl.std_error;
      } else {
        // log qbar(mu + C z) = -d/2 log 2pi - log det C - |z|^2 / 2
        const double logdet = chol_lower.diagonal().array().log().sum();
        const Eigen::ArrayXd diffs = -0.5 * d * kLogTwoPi - logdet -
                                     0.5 * gamma.z_samples.array().square().rowwise().sum() -
                                     gamma.f_values.array();
        row.kl_estimate = diffs.mean();
        const auto n_kept = static_cast<double>(gamma.n_kept);
        row.kl_std_error = gamma.n_kept > 1
                               ? std::sqrt((diffs - row.kl_estimate).square().sum() /
                                           (n_kept * (n_kept - 1.0)))
                               : 0.0;
      }
    } else {
      row.kl_estimate = NAN;
      row.kl_std_error = NAN;
    }

    out.eta = std::move(step.eta_next);
    family.mean_cov(out.eta, mu, sigma);
    Eigen::VectorXd params(d + d * (d + 1) / 2);
    params.head(d) = mu;
    for_each_upper(d, [&](int i, int j, int idx) { params[d + idx] = sigma(i, j); });
    row.params = std::move(params);
    row.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    out.trace.rows.push_back(std::move(row));
  }
  return out;
}

RunResult run_mf(Target& target, const Eigen::VectorXd& mu0, const Eigen::VectorXd& sigma2_0,
                 std::int64_t n, std::int64_t t_iters, const StepsizePolicy& policy,
                 RngStream stream, const RunOptions& options) {
  const int d = static_cast<int>(mu0.size());
  if (t_iters < 1) throw Error("run_mf: need T >= 1");
  policy.validate();
  MeanFieldGaussian family(d);

  RunResult out;
  out.trace.param_labels = family.canonical_labels();
  out.trace.rows.reserve(t_iters);

  Eigen::VectorXd mu = mu0;
  Eigen::VectorXd sigma2 = sigma2_0;
  out.eta = family.eta_from_mean_var(mu, sigma2);
  const auto domain_test = [&](const Eigen::VectorXd& e) { return family.in_domain(e); };

  for (std::int64_t t = 0; t < t_iters; ++t) {
    const auto started = std::chrono::steady_clock::now();
    RngStream iter_stream = stream.substream(4 * static_cast<std::uint64_t>(t));
    RngStream kl_stream = stream.substream(4 * static_cast<std::uint64_t>(t) + 2);
    target.begin_iteration(static_cast<std::uint64_t>(t),
                           stream.substream(4 * static_cast<std::uint64_t>(t) + 3));

    const Eigen::VectorXd sigma = sigma2.array().sqrt().matrix();
    GammaCoeffs gamma = estimate_gamma_mf(mu, sigma, target, n, iter_stream);
    const Eigen::VectorXd eta_prime = gamma_to_beta_mf(gamma.coeffs, mu, sigma);
    const Eigen::VectorXd preds = gamma_predictions(gamma.coeffs, gamma.z_samples, false);

    StepResult step =
        apply_stepsize(policy, t, out.eta, eta_prime, gamma.f_values, preds, domain_test);

    TraceRow row;
    row.t = t;
    row.epsilon = step.epsilon;
    row.halvings = step.halvings;
    row.residual_std = step.residuals.std_dev;
    row.dropped_fraction = gamma.dropped_fraction;
    const bool want_kl = options.kl_mode != KlMode::Off &&
                         (options.kl_every <= 1 || t % options.kl_every == 0 ||
                          t == t_iters - 1);
    if (want_kl) {
      if (options.kl_mode == KlMode::Fresh) {
        const KlEstimate kl = kl_up_to_const(family, out.eta, target, n, kl_stream);
        row.kl_estimate = kl.value;
        row.kl_std_error = kl.std_error;
      } else {
        const double logdet = 0.5 * sigma2.array().log().sum();
        const Eigen::ArrayXd diffs = -0.5 * d * kLogTwoPi - logdet -
                                     0.5 * gamma.z_samples.array().square().rowwise().sum() -
                                     gamma.f_values.array();
        row.kl_estimate = diffs.mean();
        const auto n_kept = static_cast<double>(gamma.n_kept);
        row.kl_std_error = gamma.n_kept > 1
                               ? std::sqrt((diffs - row.kl_estimate).square().sum() /
                                           (n_kept * (n_kept - 1.0)))
                               : 0.0;
      }
    } else {
      row.kl_estimate = NAN;
      row.kl_std_error = NAN;
    }

    out.eta = std::move(step.eta_next);
    family.mean_var(out.eta, mu, sigma2);
    Eigen::VectorXd params(2 * d);
    params.head(d) = mu;
    params.tail(d) = sigma2;
    row.params = std::move(params);
    row.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    out.trace.rows.push_back(std::move(row));
  }
  return out;
}

}  // namespace lsvi
