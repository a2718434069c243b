#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Cholesky>

#include "lsvi/errors.hpp"
#include "lsvi/data.hpp"
#include "lsvi/targets.hpp"

using namespace lsvi;

TEST_CASE("logistic_logpost: hand value, saturation, gradient check") {
  {
    Eigen::MatrixXd x(1, 1);
    x << 1.0;
    Eigen::VectorXd y(1);
    y << 1.0;
    LogisticTarget target(x, y, Eigen::VectorXd::Constant(1, 25.0));
    CHECK(target.log_posterior(Eigen::VectorXd::Zero(1)) ==
          doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  }
  {
    // Scores at +1000 for every datum: likelihood saturates to 0, no overflow.
    Eigen::MatrixXd x(3, 1);
    x << 1000.0, 1000.0, 1000.0;
    Eigen::VectorXd y = Eigen::VectorXd::Ones(3);
    LogisticTarget target(x, y, Eigen::VectorXd::Constant(1, 25.0));
    Eigen::VectorXd beta(1);
    beta << 1.0;
    const double v = target.log_posterior(beta);
    CHECK(std::isfinite(v));
    CHECK(v == doctest::Approx(-0.5 / 25.0).epsilon(1e-9));
  }
  {
    RngStream s(51, 0);
    Dataset ds = synth_logistic(40, 3, s);
    LogisticTarget target(ds.x, ds.y, Eigen::VectorXd::Constant(3, 25.0));
    const Eigen::VectorXd beta = draw_standard_normal(s, 3, 1).col(0);
    const Eigen::VectorXd grad = target.gradient(beta);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd hi = beta, lo = beta;
      hi[j] += h;
      lo[j] -= h;
      const double fd = (target.log_posterior(hi) - target.log_posterior(lo)) / (2 * h);
      CHECK(fd == doctest::Approx(grad[j]).epsilon(1e-5));
    }
  }
}

TEST_CASE("logistic_logpost is concave along random segments") {
  RngStream s(52, 0);
  Dataset ds = synth_logistic(60, 4, s);
  LogisticTarget target(ds.x, ds.y, Eigen::VectorXd::Constant(4, 25.0));
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::VectorXd a = draw_standard_normal(s, 4, 1).col(0);
    const Eigen::VectorXd b = draw_standard_normal(s, 4, 1).col(0);
    const double f0 = target.log_posterior(a);
    const double f1 = target.log_posterior(0.5 * (a + b));
    const double f2 = target.log_posterior(b);
    CHECK(f0 + f2 - 2.0 * f1 <= 1e-9);  // second difference <= 0
  }
}

TEST_CASE("subsampled logistic: identity batch equals the full posterior") {
  RngStream s(53, 0);
  Dataset ds = synth_logistic(30, 3, s);
  const Eigen::VectorXd pv = Eigen::VectorXd::Constant(3, 25.0);
  LogisticTarget full(ds.x, ds.y, pv);
  SubsampledLogisticTarget sub(ds.x, ds.y, pv, 30);
  sub.use_identity_batch();
  const Eigen::VectorXd beta = draw_standard_normal(s, 3, 1).col(0);
  CHECK(sub.log_density(beta, RngStream()) ==
        doctest::Approx(full.log_posterior(beta)).epsilon(1e-12));
}

TEST_CASE("subsampled logistic is unbiased over batches") {
  RngStream s(54, 0);
  Dataset ds = synth_logistic(50, 3, s);
  const Eigen::VectorXd pv = Eigen::VectorXd::Constant(3, 25.0);
  LogisticTarget full(ds.x, ds.y, pv);
  SubsampledLogisticTarget sub(ds.x, ds.y, pv, 10);
  const Eigen::VectorXd beta = draw_standard_normal(s, 3, 1).col(0);
  const double exact = full.log_posterior(beta);

  const int reps = 10000;
  double mean = 0.0, sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    sub.begin_iteration(r, RngStream(54, 1000 + r));
    const double v = sub.log_density(beta, RngStream());
    mean += v;
    sq += v * v;
  }
  mean /= reps;
  sq /= reps;
  const double se = std::sqrt(std::max(0.0, sq - mean * mean) / reps);
  CHECK(std::abs(mean - exact) <= 5.0 * se);
}

TEST_CASE("subsampled logistic: P = 1 variance magnitude") {
  RngStream s(55, 0);
  Dataset ds = synth_logistic(40, 2, s);
  const Eigen::VectorXd pv = Eigen::VectorXd::Constant(2, 25.0);
  const Eigen::VectorXd beta = draw_standard_normal(s, 2, 1).col(0);
  const int n = 40;

  // Per-datum log-likelihood population variance.
  Eigen::MatrixXd xs = ds.x;
  xs.array().colwise() *= ds.y.array();
  Eigen::VectorXd ll(n);
  for (int i = 0; i < n; ++i) ll[i] = log_sigmoid(xs.row(i).dot(beta));
  const double pop_var = (ll.array() - ll.mean()).square().mean();

  SubsampledLogisticTarget sub(ds.x, ds.y, pv, 1);
  const int reps = 20000;
  double mean = 0.0, sq = 0.0;
  for (int r = 0; r < reps; ++r) {
    sub.begin_iteration(r, RngStream(55, 2000 + r));
    const double v = sub.log_density(beta, RngStream());
    mean += v;
    sq += v * v;
  }
  mean /= reps;
  sq /= reps;
  const double var = sq - mean * mean;
  const double predicted = n * n * pop_var;  // with-replacement, P = 1
  CHECK(var / predicted > 0.8);
  CHECK(var / predicted < 1.2);
}

TEST_CASE("varsel_logpost: empty model, oracle match, irrelevant-column invariance") {
  RngStream s(56, 0);
  const int n = 20, d = 6;
  VarSelInstance inst = synth_varsel(n, d, 2, 0.5, s);
  const VarSelHyper hyper = hyperparams_from_data(inst.data.x, inst.data.y);
  VarSelTarget target(inst.data.x, inst.data.y, hyper);

  const double yty = inst.data.y.squaredNorm();
  const double expect_empty =
      -0.5 * (hyper.w + d) * std::log(hyper.w * hyper.lambda / d + yty / d);
  CHECK(target.log_posterior(Eigen::VectorXd::Zero(d)) ==
        doctest::Approx(expect_empty).epsilon(1e-12));

  // Independent oracle: explicit log-determinant and dense solve.
  for (int mask = 1; mask < (1 << d); mask += 7) {
    Eigen::VectorXd gamma(d);
    for (int j = 0; j < d; ++j) gamma[j] = (mask >> j) & 1 ? 1.0 : 0.0;
    std::vector<int> sel;
    for (int j = 0; j < d; ++j)
      if (gamma[j] > 0.5) sel.push_back(j);
    const int k = static_cast<int>(sel.size());
    Eigen::MatrixXd zg(n, k);
    for (int c = 0; c < k; ++c) zg.col(c) = inst.data.x.col(sel[c]);
    Eigen::MatrixXd a = zg.transpose() * zg;
    a.diagonal().array() += 1.0 / hyper.v2;
    const Eigen::VectorXd bg = zg.transpose() * inst.data.y;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    const double logdet = ldlt.vectorD().array().log().sum();
    const double quad = bg.dot(ldlt.solve(bg));
    const double sigma2 = (yty - quad) / d;
    const double oracle = -0.5 * logdet - 0.5 * k * std::log(hyper.v2) -
                          0.5 * (hyper.w + d) * std::log(hyper.w * hyper.lambda / d + sigma2);
    CHECK(target.log_posterior(gamma) == doctest::Approx(oracle).epsilon(1e-9));
  }

  // The formula touches only selected columns: overwriting a non-selected
  // column's values leaves the score unchanged.
  Eigen::MatrixXd zalt = inst.data.x;
  zalt.col(0).setConstant(42.0);
  VarSelTarget altered(zalt, inst.data.y, hyper);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(d);
  g[1] = 1.0;
  g[3] = 1.0;
  CHECK(altered.log_posterior(g) ==
        doctest::Approx(target.log_posterior(g)).epsilon(1e-12));
}

TEST_CASE("hyperparams_from_data: known residual variance, constants") {
  RngStream s(57, 0);
  const int n = 10000, d = 4;
  const Eigen::MatrixXd z = draw_standard_normal(s, n, d);
  Eigen::VectorXd beta(d);
  beta << 1.0, -2.0, 0.5, 3.0;
  const Eigen::VectorXd noise = draw_standard_normal(s, n, 1).col(0);
  const Eigen::VectorXd y = z * beta + noise;
  const VarSelHyper hyper = hyperparams_from_data(z, y);
  CHECK(hyper.w == 4.0);
  CHECK(hyper.lambda == doctest::Approx(1.0).epsilon(0.05));
  CHECK(hyper.v2 == doctest::Approx(10.0 / hyper.lambda).epsilon(1e-12));

  Eigen::MatrixXd with_intercept(n, 2);
  with_intercept.col(0).setOnes();
  with_intercept.col(1) = z.col(0);
  CHECK_THROWS_AS(hyperparams_from_data(with_intercept, Eigen::VectorXd::Constant(n, 3.0)),
                  DegenerateData);
}

TEST_CASE("stable sampler: Gaussian and Cauchy limits, characteristic function") {
  const int n = 200000;
  {
    RngStream s(58, 0);
    const Eigen::VectorXd x = levy_stable_sample(2.0, 1.0, s, n);
    const double var = (x.array() - x.mean()).square().mean();
    CHECK(var == doctest::Approx(2.0).epsilon(0.03));
  }
  {
    RngStream s(58, 1);
    Eigen::VectorXd x = levy_stable_sample(1.0, 1.0, s, n);
    std::vector<double> v(x.data(), x.data() + n);
    std::sort(v.begin(), v.end());
    const double iqr = v[3 * n / 4] - v[n / 4];
    CHECK(std::abs(v[n / 2]) < 0.02);
    CHECK(iqr == doctest::Approx(2.0).epsilon(0.03));
  }
  {
    RngStream s(58, 2);
    const double alpha = 1.7, delta = 1.3;
    const Eigen::VectorXd x = levy_stable_sample(alpha, delta, s, n);
    std::complex<double> cf(0.0, 0.0);
    for (int i = 0; i < n; ++i) cf += std::exp(std::complex<double>(0.0, x[i]));
    cf /= static_cast<double>(n);
    CHECK(std::abs(cf) == doctest::Approx(std::exp(-std::pow(delta, alpha))).epsilon(0.02));
  }
}

TEST_CASE("toad_simulate: p0 = 0 pins every toad to its first site") {
  Theta theta{1.7, 35.0, 0.0};
  RngStream s(59, 0);
  const Eigen::MatrixXd y = toad_simulate(theta, 20, 30, s);
  for (int i = 0; i < 20; ++i)
    CHECK((y.row(i).array() == y(i, 0)).all());
}

TEST_CASE("toad_simulate: revisit fraction matches 1 - p0") {
  Theta theta{2.0, 100.0, 0.9};
  RngStream s(59, 1);
  const int m = 200, days = 501;
  const Eigen::MatrixXd y = toad_simulate(theta, m, days, s);
  std::int64_t revisits = 0, transitions = 0;
  for (int i = 0; i < m; ++i)
    for (int t = 0; t + 1 < days; ++t) {
      ++transitions;
      bool matched = false;
      for (int back = 0; back <= t && !matched; ++back)
        matched = y(i, t + 1) == y(i, back);
      if (matched) ++revisits;
    }
  const double frac = static_cast<double>(revisits) / static_cast<double>(transitions);
  CHECK(frac == doctest::Approx(0.1).epsilon(0.05));

  RngStream s2(59, 1);
  const Eigen::MatrixXd y2 = toad_simulate(theta, m, days, s2);
  CHECK(y == y2);  // determinism under a fixed stream
}

TEST_CASE("toad_summaries: degenerate all-returns case and hand quantiles") {
  {
    const Eigen::MatrixXd y = Eigen::MatrixXd::Constant(5, 12, 3.0);
    const ToadSummary s = toad_summaries(y, {1, 2, 4, 8}, 10.0);
    CHECK(s.degenerate);
    CHECK(s.values[0] == 5.0 * 11.0);  // lag-1 pairs all within threshold
    REQUIRE(s.values.size() == 48);
  }
  {
    // One toad; lag-1 displacements 20, 40, 80, 160 then rests.
    Eigen::MatrixXd y(1, 12);
    y << 0, 20, 60, 140, 300, 300, 300, 300, 300, 300, 300, 300;
    const ToadSummary s = toad_summaries(y, {1, 2, 4, 8}, 10.0);
    CHECK(s.values[0] == 7.0);                       // seven zero displacements
    CHECK(s.values[1] == doctest::Approx(60.0));     // median of {20,40,80,160}
    // Type-7 quantiles of {20,40,80,160} at p = 0, .1, ..., 1:
    // 20, 26, 32, 38, 48, 60, 72, 88, 112, 136, 160.
    const double expected[10] = {6, 6, 6, 10, 12, 12, 16, 24, 24, 24};
    for (int q = 0; q < 10; ++q)
      CHECK(s.values[2 + q] == doctest::Approx(std::log(expected[q])).epsilon(1e-12));
  }
}

TEST_CASE("quantile rule: inclusive endpoints with linear interpolation") {
  const std::vector<double> v{1.0, 2.0, 4.0};
  CHECK(quantile_sorted(v, 0.0) == 1.0);
  CHECK(quantile_sorted(v, 1.0) == 4.0);
  CHECK(quantile_sorted(v, 0.5) == 2.0);
  CHECK(quantile_sorted(v, 0.75) == doctest::Approx(3.0));
}

TEST_CASE("bsl_logpost: shrinkage hooks, noise contract, box prior") {
  ToadConfig config;
  config.n_toads = 20;
  config.n_days = 20;
  config.replicates = 60;  // must exceed the 48-dim summary for the g = 1 hook
  const Theta star{1.7, 35.0, 0.6};
  RngStream obs(60, 0);
  BslToadTarget target = BslToadTarget::from_simulation(config, star, obs);

  Eigen::Vector3d theta(1.7, 35.0, 0.6);
  const double v1 = target.log_density(theta, RngStream(61, 5));
  const double v2 = target.log_density(theta, RngStream(61, 5));
  const double v3 = target.log_density(theta, RngStream(61, 6));
  CHECK(v1 == v2);  // same stream, identical value
  CHECK(v1 != v3);  // different stream, noisy value
  CHECK(std::isfinite(v1));

  Eigen::Vector3d outside(0.5, 35.0, 0.6);
  CHECK(target.log_density(outside, RngStream(61, 7)) == -HUGE_VAL);

  // Shrinkage g = 1 reproduces the full-sample-covariance Gaussian score.
  ToadConfig full_cfg = config;
  full_cfg.shrinkage = 1.0;
  BslToadTarget full_target(full_cfg, target.observed_summary());
  RngStream noise(61, 8);
  const int p = full_cfg.replicates;
  Eigen::MatrixXd summaries(p, 48);
  for (int r = 0; r < p; ++r) {
    RngStream sim = noise.substream(r);
    const Eigen::MatrixXd yr = toad_simulate(star, config.n_toads, config.n_days, sim);
    summaries.row(r) = toad_summaries(yr, config.lags, config.return_threshold).values;
  }
  const Eigen::VectorXd mean = summaries.colwise().mean();
  const Eigen::MatrixXd centered = summaries.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / (p - 1);
  const Eigen::VectorXd diff = target.observed_summary() - mean;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  const double expected = -0.5 * 48 * std::log(2.0 * M_PI) -
                          0.5 * ldlt.vectorD().array().log().sum() -
                          0.5 * diff.dot(ldlt.solve(diff));
  CHECK(full_target.synthetic_loglik(star, noise) == doctest::Approx(expected).epsilon(1e-9));

  // Shrinkage g = 0 keeps only the diagonal.
  ToadConfig diag_cfg = config;
  diag_cfg.shrinkage = 0.0;
  BslToadTarget diag_target(diag_cfg, target.observed_summary());
  const Eigen::ArrayXd var = cov.diagonal().array();
  const double expected_diag = -0.5 * 48 * std::log(2.0 * M_PI) -
                               0.5 * var.log().sum() -
                               0.5 * (diff.array().square() / var).sum();
  CHECK(diag_target.synthetic_loglik(star, noise) ==
        doctest::Approx(expected_diag).epsilon(1e-9));
}

TEST_CASE("logit reparameterization: midpoint, round trip, jacobian check") {
  Eigen::Vector3d lo(kThetaLo[0], kThetaLo[1], kThetaLo[2]);
  Eigen::Vector3d hi(kThetaHi[0], kThetaHi[1], kThetaHi[2]);
  const Eigen::VectorXd mid = 0.5 * (lo + hi);
  CHECK(logit_reparam(mid, lo, hi).cwiseAbs().maxCoeff() < 1e-14);

  RngStream s(62, 0);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd theta(3);
    for (int j = 0; j < 3; ++j)
      theta[j] = lo[j] + (0.05 + 0.9 * s.next_uniform()) * (hi[j] - lo[j]);
    const Eigen::VectorXd xi = logit_reparam(theta, lo, hi);
    CHECK((logit_reparam_inverse(xi, lo, hi) - theta).cwiseAbs().maxCoeff() < 1e-12);

    // Central-difference check of log |d theta / d xi|.
    const double h = 1e-6;
    double fd_logjac = 0.0;
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd up = xi, dn = xi;
      up[j] += h;
      dn[j] -= h;
      fd_logjac += std::log((logit_reparam_inverse(up, lo, hi)[j] -
                             logit_reparam_inverse(dn, lo, hi)[j]) /
                            (2 * h));
    }
    CHECK(logit_reparam_log_jacobian(xi, lo, hi) ==
          doctest::Approx(fd_logjac).epsilon(1e-5));
  }

  Eigen::Vector3d boundary(1.0, 35.0, 0.6);
  CHECK_THROWS_AS(logit_reparam(boundary, lo, hi), DomainViolation);
}

TEST_CASE("bsl signal: truth scores higher than a far point on average") {
  ToadConfig config;
  config.n_toads = 20;
  config.n_days = 20;
  config.replicates = 60;
  const Theta star{1.7, 35.0, 0.6};
  RngStream obs(63, 0);
  BslToadTarget target = BslToadTarget::from_simulation(config, star, obs);
  const Theta far{1.02, 35.0, 0.6};  // alpha flipped to the other box end
  double at_star = 0.0, at_far = 0.0;
  int finite = 0;
  for (int r = 0; r < 50; ++r) {
    const double a = target.synthetic_loglik(star, RngStream(63, 100 + r));
    const double b = target.synthetic_loglik(far, RngStream(63, 200 + r));
    if (std::isfinite(a) && std::isfinite(b)) {
      at_star += a;
      at_far += b;
      ++finite;
    }
  }
  REQUIRE(finite > 25);
  CHECK(at_star / finite > at_far / finite);
}
