#include "lsvi/lsvi.hpp"

#include <chrono>
#include <cmath>
#include <vector>

#include "lsvi/diagnostics.hpp"
#include "lsvi/parallel.hpp"

namespace lsvi {

namespace {

// Evaluate the target on every row of X with per-sample noise substreams.
// Throws on NaN/+inf; -inf is legal (zero-density regions).
Eigen::VectorXd evaluate_target(const Target& target, const Eigen::MatrixXd& x,
                                const RngStream& noise_base) {
  Eigen::VectorXd f;
  target.log_density_batch(x, noise_base, f);
  for (std::int64_t i = 0; i < f.size(); ++i)
    if (std::isnan(f[i]) || f[i] == HUGE_VAL)
      throw TargetNotFinite("target returned NaN or +inf at sample " + std::to_string(i));
  return f;
}

std::vector<std::int64_t> kept_indices(const Eigen::VectorXd& f) {
  std::vector<std::int64_t> kept;
  kept.reserve(f.size());
  for (std::int64_t i = 0; i < f.size(); ++i)
    if (f[i] != -HUGE_VAL) kept.push_back(i);
  return kept;
}

}  // namespace

Eigen::VectorXd RegressionEstimate::predictions(const Family& family,
                                                const Eigen::VectorXd& eta) const {
  if (stats_t.size() > 0) return stats_t.transpose() * eta;
  const std::int64_t n = samples.rows();
  const int m = family.statistic_size();
  Eigen::VectorXd out(n);
  parallel_for(n, [&](std::ptrdiff_t i) {
    Eigen::VectorXd s(m);
    family.suff_stat(samples.row(i).transpose(), s);
    out[i] = s.dot(eta);
  });
  return out;
}

RegressionEstimate estimate_regression(const Family& family, const Eigen::VectorXd& eta,
                                       const Target& target, std::int64_t n,
                                       RngStream& stream) {
  family.check_eta(eta);
  if (n < 1) throw Error("estimate_regression: need N >= 1");
  const int d = family.dim();
  const int m = family.statistic_size();

  RngStream sample_stream = stream.fork(0x73616d70u);
  RngStream noise_stream = stream.fork(0x6e6f6973u);

  const Eigen::MatrixXd x = family.sample(eta, static_cast<int>(n), sample_stream);
  const Eigen::VectorXd f = evaluate_target(target, x, noise_stream);

  const auto kept = kept_indices(f);
  const std::int64_t n_kept = static_cast<std::int64_t>(kept.size());
  if (n_kept == 0)
    throw TargetNotFinite("estimate_regression: target was -inf on every draw");

  RegressionEstimate est{SymMatrix::identity(m), Eigen::VectorXd(), n, n_kept,
                         1.0 - static_cast<double>(n_kept) / static_cast<double>(n),
                         Eigen::MatrixXd(), Eigen::MatrixXd(), Eigen::VectorXd()};

  est.samples.resize(n_kept, d);
  est.f_values.resize(n_kept);
  for (std::int64_t r = 0; r < n_kept; ++r) {
    est.samples.row(r) = x.row(kept[r]);
    est.f_values[r] = f[kept[r]];
  }

  const bool retain = n_kept * m <= kStatStorageCap;
  Eigen::MatrixXd facc = Eigen::MatrixXd::Zero(m, m);
  Eigen::VectorXd zacc = Eigen::VectorXd::Zero(m);

  if (retain) {
    est.stats_t.resize(m, n_kept);
    parallel_for(n_kept, [&](std::ptrdiff_t i) {
      family.suff_stat(est.samples.row(i).transpose(), est.stats_t.col(i));
    });
    facc.selfadjointView<Eigen::Lower>().rankUpdate(est.stats_t);
    zacc.noalias() = est.stats_t * est.f_values;
  } else {
    // Above the storage cap: stream fixed-size chunks through a buffer.
    const std::int64_t chunk = std::max<std::int64_t>(1, kStatStorageCap / m / 4);
    Eigen::MatrixXd buf(m, chunk);
    for (std::int64_t b = 0; b < n_kept; b += chunk) {
      const std::int64_t len = std::min(chunk, n_kept - b);
      parallel_for(len, [&](std::ptrdiff_t i) {
        family.suff_stat(est.samples.row(b + i).transpose(), buf.col(i));
      });
      auto block = buf.leftCols(len);
      facc.selfadjointView<Eigen::Lower>().rankUpdate(block);
      zacc.noalias() += block * est.f_values.segment(b, len);
    }
  }

  const double inv = 1.0 / static_cast<double>(n_kept);
  facc *= inv;
  facc.triangularView<Eigen::StrictlyUpper>() =
      facc.triangularView<Eigen::StrictlyLower>().transpose();
  est.f_hat = SymMatrix::from_symmetric(std::move(facc));
  est.z_hat = zacc * inv;
  return est;
}

Eigen::VectorXd lsvi_ols(const RegressionEstimate& est) {
  try {
    return ols_solve(est.f_hat, est.z_hat, 0.0);
  } catch (const SingularDesign&) {
    const double ridge = 1e-10 * est.f_hat.trace() / est.f_hat.dim();
    return ols_solve(est.f_hat, est.z_hat, ridge);
  }
}

Eigen::VectorXd momentum_update(const Eigen::VectorXd& eta, const Eigen::VectorXd& eta_prime,
                                double eps) {
  if (eta.size() != eta_prime.size())
    throw DimensionMismatch("momentum_update: length mismatch");
  if (!(eps > 0.0 && eps <= 1.0)) throw Error("momentum_update: eps must be in (0, 1]");
  return eps * eta_prime + (1.0 - eps) * eta;
}

RunResult run_generic(const Family& family, Target& target, const Eigen::VectorXd& eta0,
                      std::int64_t n, std::int64_t t_iters, const StepsizePolicy& policy,
                      RngStream stream, const RunOptions& options) {
  family.check_eta(eta0);
  if (t_iters < 1) throw Error("run_generic: need T >= 1");
  policy.validate();
  if (target.dim() != family.dim())
    throw DimensionMismatch("run_generic: target dimension != family dimension");

  RunResult out;
  out.eta = eta0;
  out.trace.param_labels = family.canonical_labels();
  out.trace.rows.reserve(t_iters);

  const auto domain_test = [&](const Eigen::VectorXd& eta) { return family.in_domain(eta); };

  std::vector<double> kl_history;
  for (std::int64_t t = 0; t < t_iters; ++t) {
    const auto started = std::chrono::steady_clock::now();
    RngStream iter_stream = stream.substream(4 * static_cast<std::uint64_t>(t));
    RngStream split_stream = stream.substream(4 * static_cast<std::uint64_t>(t) + 1);
    RngStream kl_stream = stream.substream(4 * static_cast<std::uint64_t>(t) + 2);
    target.begin_iteration(static_cast<std::uint64_t>(t),
                           stream.substream(4 * static_cast<std::uint64_t>(t) + 3));

    RegressionEstimate est = estimate_regression(family, out.eta, target, n, iter_stream);
    if (options.split_samples) {
      // Analysis setting: an independent set for the cross-moment only.
      RegressionEstimate est_z = estimate_regression(family, out.eta, target, n, split_stream);
      est.z_hat = est_z.z_hat;
    }
    const Eigen::VectorXd eta_prime = lsvi_ols(est);
    const Eigen::VectorXd preds = est.predictions(family, eta_prime);

    StepResult step =
        apply_stepsize(policy, t, out.eta, eta_prime, est.f_values, preds, domain_test);

    TraceRow row;
    row.t = t;
    row.epsilon = step.epsilon;
    row.halvings = step.halvings;
    row.residual_std = step.residuals.std_dev;
    row.dropped_fraction = est.dropped_fraction;
    const bool want_kl = options.kl_mode != KlMode::Off &&
                         (options.kl_every <= 1 || t % options.kl_every == 0 ||
                          t == t_iters - 1);
    if (want_kl) {
      const KlEstimate kl =
          options.kl_mode == KlMode::Fresh
              ? kl_up_to_const(family, out.eta, target, n, kl_stream)
              : kl_from_samples(family, out.eta, est.samples, est.f_values);
      row.kl_estimate = kl.value;
      row.kl_std_error = kl.std_error;
    } else {
      row.kl_estimate = NAN;
      row.kl_std_error = NAN;
    }

    out.eta = std::move(step.eta_next);
    row.params = family.to_canonical(out.eta);
    row.elapsed_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                         std::chrono::steady_clock::now() - started)
                         .count();
    out.trace.rows.push_back(std::move(row));

    if (options.early_stop_tol > 0.0 && want_kl) {
      kl_history.push_back(out.trace.rows.back().kl_estimate);
      const std::size_t w = static_cast<std::size_t>(options.early_stop_window);
      if (kl_history.size() > w &&
          std::abs(kl_history.back() - kl_history[kl_history.size() - 1 - w]) <
              options.early_stop_tol)
        break;
    }
  }
  return out;
}

}  // namespace lsvi
