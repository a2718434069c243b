#include <doctest.h>

#include <cmath>

#include "lsvi/lsvi.hpp"
#include "lsvi/parallel.hpp"

using namespace lsvi;

namespace {

// Exact OLS over given samples, through the same estimator plumbing.
RegressionEstimate estimate_from(const Family& family, const Eigen::MatrixXd& samples,
                                 const Eigen::VectorXd& f) {
  const auto n = samples.rows();
  const int m = family.statistic_size();
  Eigen::MatrixXd st(m, n);
  for (Eigen::Index i = 0; i < n; ++i)
    family.suff_stat(samples.row(i).transpose(), st.col(i));
  Eigen::MatrixXd fh = Eigen::MatrixXd::Zero(m, m);
  fh.selfadjointView<Eigen::Lower>().rankUpdate(st);
  fh /= static_cast<double>(n);
  fh.triangularView<Eigen::StrictlyUpper>() =
      fh.triangularView<Eigen::StrictlyLower>().transpose();
  return RegressionEstimate{SymMatrix::from_symmetric(std::move(fh)),
                            (st * f) / static_cast<double>(n),
                            n,
                            n,
                            0.0,
                            samples,
                            st,
                            f};
}

}  // namespace

TEST_CASE("estimate_regression: Bernoulli d=1 second-moment matrix") {
  BernoulliProduct family(1);
  const Eigen::VectorXd eta = family.from_canonical(Eigen::VectorXd::Constant(1, 0.5));
  auto target = make_target(1, [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return 0.3 * x[0];
  });
  RngStream stream(11, 0);
  const RegressionEstimate est = estimate_regression(family, eta, target, 1000000, stream);
  Eigen::MatrixXd expected(2, 2);
  expected << 1.0, 0.5, 0.5, 0.5;
  CHECK((est.f_hat.mat() - expected).cwiseAbs().maxCoeff() < 0.005);
  CHECK(est.n_kept == 1000000);
}

TEST_CASE("estimate_regression: constant target gives z = c * mean(s) exactly") {
  MeanFieldGaussian family(2);
  Eigen::VectorXd canonical(4);
  canonical << 0.5, -1.0, 1.0, 2.0;
  const Eigen::VectorXd eta = family.from_canonical(canonical);
  const double c = 3.25;
  auto target = make_target(2, [&](const Eigen::Ref<const Eigen::VectorXd>&) { return c; });
  RngStream stream(12, 0);
  const RegressionEstimate est = estimate_regression(family, eta, target, 5000, stream);
  // First statistic coordinate is 1, so mean(s) is the first column of F.
  CHECK((est.z_hat - c * est.f_hat.mat().col(0)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("estimate_regression: N=1 gives the rank-one outer product") {
  MeanFieldGaussian family(1);
  Eigen::VectorXd canonical(2);
  canonical << 0.0, 1.0;
  const Eigen::VectorXd eta = family.from_canonical(canonical);
  auto target = make_target(1, [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return -0.5 * x[0] * x[0];
  });
  RngStream stream(13, 0);
  const RegressionEstimate est = estimate_regression(family, eta, target, 1, stream);
  const Eigen::VectorXd s = family.suff_stat(est.samples.row(0).transpose());
  CHECK((est.f_hat.mat() - s * s.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  // The raw solve signals the rank deficiency; lsvi_ols survives it through
  // its one-shot ridge retry.
  CHECK_THROWS_AS(ols_solve(est.f_hat, est.z_hat, 0.0), SingularDesign);
  CHECK(lsvi_ols(est).allFinite());
}

TEST_CASE("estimate_regression drops -inf draws and renormalizes") {
  MeanFieldGaussian family(1);
  Eigen::VectorXd canonical(2);
  canonical << 0.0, 1.0;
  const Eigen::VectorXd eta = family.from_canonical(canonical);
  auto target = make_target(1, [](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return x[0] > 0 ? -0.1 * x[0] : -HUGE_VAL;
  });
  RngStream stream(14, 0);
  const RegressionEstimate est = estimate_regression(family, eta, target, 4000, stream);
  CHECK(est.n_kept < est.n_requested);
  CHECK(est.dropped_fraction == doctest::Approx(0.5).epsilon(0.05));
  CHECK((est.samples.col(0).array() > 0).all());
  CHECK(est.f_values.allFinite());

  auto nan_target = make_target(1, [](const Eigen::Ref<const Eigen::VectorXd>&) {
    return std::numeric_limits<double>::quiet_NaN();
  });
  RngStream stream2(14, 1);
  CHECK_THROWS_AS(estimate_regression(family, eta, nan_target, 10, stream2),
                  TargetNotFinite);
}

TEST_CASE("lsvi_ols: in-span targets are recovered exactly") {
  MeanFieldGaussian family(3);
  const int m = family.statistic_size();
  Eigen::VectorXd eta_star(m);
  eta_star << 0.7, 0.5, -0.25, 1.5, -0.8, -0.5, -1.2;
  Eigen::VectorXd canonical(6);
  canonical << 0, 0, 0, 1, 1, 1;
  const Eigen::VectorXd eta = family.from_canonical(canonical);
  RngStream stream(15, 0);
  const Eigen::MatrixXd x = family.sample(eta, 50, stream);
  Eigen::VectorXd f(50);
  for (int i = 0; i < 50; ++i)
    f[i] = eta_star.dot(family.suff_stat(x.row(i).transpose()));
  const RegressionEstimate est = estimate_from(family, x, f);
  CHECK((lsvi_ols(est) - eta_star).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lsvi_ols: constants are absorbed by the intercept") {
  MeanFieldGaussian family(2);
  Eigen::VectorXd canonical(4);
  canonical << 0.3, -0.4, 0.7, 1.3;
  const Eigen::VectorXd eta = family.from_canonical(canonical);
  RngStream stream(16, 0);
  const Eigen::MatrixXd x = family.sample(eta, 64, stream);
  const Eigen::VectorXd f = Eigen::VectorXd::Constant(64, 3.0);
  const Eigen::VectorXd beta = lsvi_ols(estimate_from(family, x, f));
  CHECK(beta[0] == doctest::Approx(3.0).epsilon(1e-9));
  CHECK(beta.tail(4).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("lsvi_ols is invariant under duplicating all samples") {
  MeanFieldGaussian family(2);
  Eigen::VectorXd canonical(4);
  canonical << 0.1, 0.1, 0.8, 1.1;
  const Eigen::VectorXd eta = family.from_canonical(canonical);
  RngStream stream(17, 0);
  const Eigen::MatrixXd x = family.sample(eta, 40, stream);
  Eigen::VectorXd f(40);
  for (int i = 0; i < 40; ++i) f[i] = std::sin(x(i, 0)) + x(i, 1);
  Eigen::MatrixXd x2(80, 2);
  x2 << x, x;
  Eigen::VectorXd f2(80);
  f2 << f, f;
  const Eigen::VectorXd beta1 = lsvi_ols(estimate_from(family, x, f));
  const Eigen::VectorXd beta2 = lsvi_ols(estimate_from(family, x2, f2));
  CHECK((beta1 - beta2).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("momentum_update basics") {
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(3);
  Eigen::VectorXd eta_prime = Eigen::VectorXd::Constant(3, 2.0);
  CHECK(momentum_update(eta, eta_prime, 1.0) == eta_prime);
  CHECK(momentum_update(eta, eta_prime, 0.5) == Eigen::VectorXd::Constant(3, 1.0));
  // Affine in eps: midpoint of the eps=0.2 and eps=0.8 points is eps=0.5.
  const Eigen::VectorXd a = momentum_update(eta, eta_prime, 0.2);
  const Eigen::VectorXd b = momentum_update(eta, eta_prime, 0.8);
  CHECK((0.5 * (a + b)).isApprox(momentum_update(eta, eta_prime, 0.5)));
  CHECK_THROWS_AS(momentum_update(eta, eta_prime, 0.0), Error);
}

TEST_CASE("tempering identity: OLS of tempered responses equals the momentum mix") {
  MeanFieldGaussian family(2);
  Eigen::VectorXd canonical(4);
  canonical << 0.4, -0.6, 1.2, 0.5;
  const Eigen::VectorXd eta = family.from_canonical(canonical);
  RngStream stream(18, 0);
  const Eigen::MatrixXd x = family.sample(eta, 400, stream);
  Eigen::VectorXd f(400);
  for (int i = 0; i < 400; ++i) f[i] = std::cos(x(i, 0)) - 0.5 * x(i, 1) * x(i, 1);
  const RegressionEstimate est = estimate_from(family, x, f);
  const Eigen::VectorXd ols = lsvi_ols(est);
  for (const double eps : {0.1, 0.5, 1.0}) {
    Eigen::VectorXd tempered(400);
    for (int i = 0; i < 400; ++i)
      tempered[i] = eps * f[i] + (1.0 - eps) * eta.dot(est.stats_t.col(i));
    const Eigen::VectorXd direct = lsvi_ols(estimate_from(family, x, tempered));
    const Eigen::VectorXd mixed = momentum_update(eta, ols, eps);
    CHECK((direct - mixed).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("residual scaling: tempered residual std equals eps times the OLS one") {
  MeanFieldGaussian family(2);
  Eigen::VectorXd canonical(4);
  canonical << -0.2, 0.9, 0.6, 1.4;
  const Eigen::VectorXd eta = family.from_canonical(canonical);
  RngStream stream(19, 0);
  const Eigen::MatrixXd x = family.sample(eta, 300, stream);
  Eigen::VectorXd f(300);
  for (int i = 0; i < 300; ++i) f[i] = std::tanh(x(i, 0) * x(i, 1));
  const RegressionEstimate est = estimate_from(family, x, f);
  const Eigen::VectorXd ols = lsvi_ols(est);
  const Eigen::VectorXd ols_preds = est.stats_t.transpose() * ols;
  const double v_ols = residual_stats_from(f, ols_preds).std_dev;
  for (const double eps : {0.25, 0.7, 1.0}) {
    const Eigen::VectorXd mixed = momentum_update(eta, ols, eps);
    Eigen::VectorXd tempered(300);
    for (int i = 0; i < 300; ++i)
      tempered[i] = eps * f[i] + (1.0 - eps) * eta.dot(est.stats_t.col(i));
    const Eigen::VectorXd mixed_preds = est.stats_t.transpose() * mixed;
    const double v_temp = residual_stats_from(tempered, mixed_preds).std_dev;
    CHECK(v_temp == doctest::Approx(eps * v_ols).epsilon(1e-9));
  }
}

TEST_CASE("run_generic: exact one-step recovery of an in-family full-cov target") {
  const int d = 3;
  FullCovGaussian family(d);
  RngStream gen(20, 0);
  const Eigen::MatrixXd a = draw_standard_normal(gen, d, d);
  const Eigen::MatrixXd sigma_star =
      a * a.transpose() + Eigen::MatrixXd::Identity(d, d);
  const Eigen::VectorXd mu_star = draw_standard_normal(gen, d, 1).col(0);
  const Eigen::VectorXd eta_star = family.eta_from_mean_cov(mu_star, sigma_star);

  auto target = make_target(d, [&](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return family.log_density(eta_star, x) + 4.2;  // any additive constant
  });

  const Eigen::VectorXd eta0 =
      family.eta_from_mean_cov(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
  const int m = family.statistic_size();
  RunOptions opts;
  opts.kl_mode = KlMode::Reuse;
  const RunResult res = run_generic(family, target, eta0, 10 * m, 1,
                                    StepsizePolicy::fixed(1.0), RngStream(21, 0), opts);
  // The intercept absorbs normalizing constants; compare the rest.
  CHECK((res.eta.tail(m - 1) - eta_star.tail(m - 1)).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(res.trace.rows.size() == 1);
}

TEST_CASE("run_generic: Bernoulli in-family target reaches the fixed point") {
  BernoulliProduct family(2);
  Eigen::VectorXd p(2);
  p << 0.9, 0.2;
  const Eigen::VectorXd eta_star = family.from_canonical(p);
  auto target = make_target(2, [&](const Eigen::Ref<const Eigen::VectorXd>& x) {
    return family.log_density(eta_star, x);
  });
  const Eigen::VectorXd eta0 = family.from_canonical(Eigen::VectorXd::Constant(2, 0.5));
  RunOptions opts;
  opts.kl_mode = KlMode::Reuse;
  const RunResult res = run_generic(family, target, eta0, 20000, 20,
                                    StepsizePolicy::linear(1.0, 1.0), RngStream(22, 0), opts);
  const Eigen::VectorXd q = family.to_canonical(res.eta);
  CHECK((q - p).cwiseAbs().maxCoeff() < 0.02);
  for (const auto& row : res.trace.rows) {
    CHECK(row.epsilon > 0.0);
    CHECK(row.epsilon <= 1.0);
  }
}

TEST_CASE("run_generic traces are identical across thread counts") {
  MeanFieldGaussian family(2);
  Eigen::VectorXd canonical(4);
  canonical << 0, 0, 1, 1;
  const Eigen::VectorXd eta0 = family.from_canonical(canonical);
  auto make_quad = []() {
    return make_target(2, [](const Eigen::Ref<const Eigen::VectorXd>& x) {
      return -0.5 * (x[0] - 1) * (x[0] - 1) - 0.25 * x[1] * x[1];
    });
  };
  RunOptions opts;
  opts.kl_mode = KlMode::Fresh;
  std::string csv1, csv4;
  {
    set_thread_override(1);
    auto t = make_quad();
    const RunResult r = run_generic(family, t, eta0, 3000, 5,
                                    StepsizePolicy::linear(1.0, 1.0), RngStream(23, 0), opts);
    csv1 = r.trace.to_csv_without_timing();
  }
  {
    set_thread_override(4);
    auto t = make_quad();
    const RunResult r = run_generic(family, t, eta0, 3000, 5,
                                    StepsizePolicy::linear(1.0, 1.0), RngStream(23, 0), opts);
    csv4 = r.trace.to_csv_without_timing();
  }
  set_thread_override(0);
  CHECK(csv1 == csv4);
  CHECK(!csv1.empty());
}

TEST_CASE("split-sample option changes only the cross moment estimate") {
  MeanFieldGaussian family(1);
  Eigen::VectorXd canonical(2);
  canonical << 0, 1;
  const Eigen::VectorXd eta0 = family.from_canonical(canonical);
  auto make_t = []() {
    return make_target(1, [](const Eigen::Ref<const Eigen::VectorXd>& x) {
      return -0.5 * x[0] * x[0] + x[0];
    });
  };
  RunOptions shared, split;
  shared.kl_mode = KlMode::Off;
  split = shared;
  split.split_samples = true;
  auto t1 = make_t();
  auto t2 = make_t();
  const RunResult a = run_generic(family, t1, eta0, 2000, 3, StepsizePolicy::fixed(0.5),
                                  RngStream(24, 0), shared);
  const RunResult b = run_generic(family, t2, eta0, 2000, 3, StepsizePolicy::fixed(0.5),
                                  RngStream(24, 0), split);
  CHECK(a.eta != b.eta);  // different estimator with the same seed
  CHECK((a.eta - b.eta).cwiseAbs().maxCoeff() < 0.2);
}
