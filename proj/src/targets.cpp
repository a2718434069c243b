#include "lsvi/targets.hpp"

#include <algorithm>
#include <cmath>

#include "lsvi/errors.hpp"
#include "lsvi/linalg.hpp"

namespace lsvi {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kHalfPi = 1.5707963267948966192313216916398;
}  // namespace

double log_sigmoid(double u) {
  return u >= 0.0 ? -std::log1p(std::exp(-u)) : u - std::log1p(std::exp(u));
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

LogisticTarget::LogisticTarget(Eigen::MatrixXd x, Eigen::VectorXd y,
                               Eigen::VectorXd prior_variances)
    : y_(std::move(y)), prior_var_(std::move(prior_variances)) {
  if (x.rows() != y_.size() || x.cols() != prior_var_.size())
    throw DimensionMismatch("logistic target: inconsistent sizes");
  if (!((y_.array() == 1.0) || (y_.array() == -1.0)).all())
    throw Error("logistic target: labels must be -1 or +1");
  if (!(prior_var_.array() > 0.0).all())
    throw Error("logistic target: prior variances must be positive");
  x_ = std::move(x);
  x_.array().colwise() *= y_.array();
}

double LogisticTarget::log_posterior(const Eigen::Ref<const Eigen::VectorXd>& beta) const {
  const Eigen::VectorXd scores = x_ * beta;
  double loglik = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) loglik += log_sigmoid(scores[i]);
  const double logprior = -0.5 * (beta.array().square() / prior_var_.array()).sum();
  return logprior + loglik;
}

double LogisticTarget::log_density(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                   RngStream) const {
  return log_posterior(beta);
}

void LogisticTarget::log_density_batch(const Eigen::MatrixXd& betas, const RngStream&,
                                       Eigen::VectorXd& out) const {
  const std::int64_t n = betas.rows();
  out.resize(n);
  const Eigen::RowVectorXd inv_var = prior_var_.cwiseInverse().transpose();
  parallel_for_chunks(n, [&](std::ptrdiff_t b, std::ptrdiff_t e) {
    const auto block = betas.middleRows(b, e - b);
    // logsigmoid(u) = min(u, 0) - log1p(exp(-|u|)), stable on both tails
    const Eigen::MatrixXd scores = block * x_.transpose();
    const Eigen::ArrayXXd u = scores.array();
    Eigen::VectorXd loglik =
        (u.min(0.0) - (-u.abs()).exp().log1p()).rowwise().sum().matrix();
    loglik.noalias() -= 0.5 * (block.array().square().matrix() * inv_var.transpose());
    out.segment(b, e - b) = loglik;
  });
}

Eigen::VectorXd LogisticTarget::gradient(const Eigen::VectorXd& beta) const {
  // sum_i y_i x_i sigmoid(-y_i x_i^T beta) - beta / priorVar
  const Eigen::VectorXd scores = x_ * beta;
  Eigen::VectorXd weights(scores.size());
  for (Eigen::Index i = 0; i < scores.size(); ++i)
    weights[i] = 1.0 / (1.0 + std::exp(scores[i]));
  return x_.transpose() * weights - (beta.array() / prior_var_.array()).matrix();
}

SubsampledLogisticTarget::SubsampledLogisticTarget(Eigen::MatrixXd x, Eigen::VectorXd y,
                                                   Eigen::VectorXd prior_variances,
                                                   int batch_size)
    : prior_var_(std::move(prior_variances)), batch_size_(batch_size) {
  if (x.rows() != y.size() || x.cols() != prior_var_.size())
    throw DimensionMismatch("subsampled logistic target: inconsistent sizes");
  if (batch_size_ < 1) throw Error("subsampled logistic target: batch size must be >= 1");
  x_ = std::move(x);
  x_.array().colwise() *= y.array();
  batch_.resize(batch_size_);
  for (int i = 0; i < batch_size_; ++i) batch_[i] = i % static_cast<int>(x_.rows());
}

void SubsampledLogisticTarget::begin_iteration(std::uint64_t, RngStream stream) {
  const int n = static_cast<int>(x_.rows());
  for (int i = 0; i < batch_size_; ++i) {
    const double u = uniform_from_bits(stream.word_at(stream.counter + i));
    batch_[i] = std::min(n - 1, static_cast<int>(u * n));
  }
}

void SubsampledLogisticTarget::use_identity_batch() {
  if (batch_size_ != static_cast<int>(x_.rows()))
    throw Error("use_identity_batch: batch size must equal n");
  for (int i = 0; i < batch_size_; ++i) batch_[i] = i;
}

double SubsampledLogisticTarget::log_density(const Eigen::Ref<const Eigen::VectorXd>& beta,
                                             RngStream) const {
  double loglik = 0.0;
  for (const int idx : batch_) loglik += log_sigmoid(x_.row(idx).dot(beta));
  const double scale = static_cast<double>(x_.rows()) / static_cast<double>(batch_size_);
  const double logprior = -0.5 * (beta.array().square() / prior_var_.array()).sum();
  return logprior + scale * loglik;
}

// ---------------------------------------------------------------------------
// Variable selection
// ---------------------------------------------------------------------------

VarSelHyper hyperparams_from_data(const Eigen::MatrixXd& z, const Eigen::VectorXd& y) {
  if (z.rows() != y.size() || z.rows() == 0)
    throw DimensionMismatch("hyperparams_from_data: inconsistent sizes");
  const Eigen::Index n = z.rows();
  const Eigen::Index d = z.cols();
  Eigen::MatrixXd gram = z.transpose() * z;
  // Saturated least squares; tiny ridge stands in for v^{-2} -> 0 when the
  // design is rank-deficient.
  Eigen::VectorXd beta;
  try {
    beta = ols_solve(SymMatrix(gram), z.transpose() * y, 0.0);
  } catch (const SingularDesign&) {
    beta = ols_solve(SymMatrix(gram), z.transpose() * y, 1e-10 * gram.trace() / d);
  }
  const double rss = (y - z * beta).squaredNorm();
  const double denom = n > d ? static_cast<double>(n - d) : static_cast<double>(n);
  const double sigma2 = rss / denom;
  if (!(sigma2 > 1e-12 * y.squaredNorm() / n + 1e-300))
    throw DegenerateData("hyperparams_from_data: zero residual variance");
  return VarSelHyper{4.0, sigma2, 10.0 / sigma2};
}

VarSelTarget::VarSelTarget(Eigen::MatrixXd z, Eigen::VectorXd y, VarSelHyper hyper)
    : hyper_(hyper) {
  if (z.rows() != y.size()) throw DimensionMismatch("varsel target: inconsistent sizes");
  if (!(hyper_.w > 0.0 && hyper_.lambda > 0.0 && hyper_.v2 > 0.0))
    throw Error("varsel target: hyperparameters must be positive");
  gram_ = z.transpose() * z;
  zty_ = z.transpose() * y;
  yty_ = y.squaredNorm();
}

double VarSelTarget::log_posterior(const Eigen::Ref<const Eigen::VectorXd>& gamma) const {
  const int d = dim();
  if (gamma.size() != d) throw DimensionMismatch("varsel: gamma has wrong length");
  std::vector<int> sel;
  sel.reserve(d);
  for (int j = 0; j < d; ++j)
    if (gamma[j] > 0.5) sel.push_back(j);
  const int k = static_cast<int>(sel.size());
  const double w = hyper_.w;
  const double lam = hyper_.lambda;
  const double dd = static_cast<double>(d);

  if (k == 0) return -0.5 * (w + dd) * std::log(w * lam / dd + yty_ / dd);

  Eigen::MatrixXd a(k, k);
  Eigen::VectorXd b(k);
  for (int r = 0; r < k; ++r) {
    b[r] = zty_[sel[r]];
    for (int c = 0; c <= r; ++c) {
      a(r, c) = gram_(sel[r], sel[c]);
      a(c, r) = a(r, c);
    }
  }
  a.diagonal().array() += 1.0 / hyper_.v2;
  const Eigen::MatrixXd chol = cholesky(SymMatrix::from_symmetric(std::move(a)));
  const Eigen::VectorXd u = tri_solve(chol, b, false);
  const double sigma2 = (yty_ - u.squaredNorm()) / dd;
  return -chol.diagonal().array().log().sum() - 0.5 * k * std::log(hyper_.v2) -
         0.5 * (w + dd) * std::log(w * lam / dd + sigma2);
}

double VarSelTarget::log_density(const Eigen::Ref<const Eigen::VectorXd>& gamma,
                                 RngStream) const {
  return log_posterior(gamma);
}

// ---------------------------------------------------------------------------
// Symmetric alpha-stable sampling
// ---------------------------------------------------------------------------

Eigen::VectorXd levy_stable_sample(double alpha, double scale, RngStream& stream, int n) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw Error("levy_stable_sample: alpha must be in (0, 2]");
  if (!(scale > 0.0)) throw Error("levy_stable_sample: scale must be positive");
  Eigen::VectorXd out(n);
  const std::uint64_t base = stream.counter;
  stream.counter += 2 * static_cast<std::uint64_t>(n);
  const double inv_alpha = 1.0 / alpha;
  const double expo = (1.0 - alpha) * inv_alpha;
  for (int i = 0; i < n; ++i) {
    // Chambers-Mallows-Stuck, symmetric case:
    // X = sin(alpha U) / cos(U)^{1/alpha} * (cos(U - alpha U) / W)^{(1-alpha)/alpha}
    const double u =
        kHalfPi * (2.0 * uniform_from_bits(stream.word_at(base + 2 * i)) - 1.0);
    const double w = -std::log(uniform_from_bits(stream.word_at(base + 2 * i + 1)));
    double x;
    if (alpha == 1.0) {
      x = std::tan(u);
    } else {
      x = std::sin(alpha * u) / std::pow(std::cos(u), inv_alpha) *
          std::pow(std::cos(u - alpha * u) / w, expo);
    }
    out[i] = scale * x;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Toad displacement model
// ---------------------------------------------------------------------------

Eigen::MatrixXd toad_simulate(const Theta& theta, int n_toads, int n_days, RngStream& stream) {
  if (n_toads < 1 || n_days < 1) throw Error("toad_simulate: need M, D >= 1");
  Eigen::MatrixXd y(n_toads, n_days);
  RngStream disp_stream = stream.fork(0x746f6164u);
  const Eigen::VectorXd steps =
      levy_stable_sample(theta.alpha, std::max(theta.delta, 1e-12), disp_stream,
                         n_toads * n_days);
  RngStream branch_stream = stream.fork(0x62726e63u);
  std::uint64_t word = 0;
  for (int i = 0; i < n_toads; ++i) {
    y(i, 0) = steps[i * n_days];  // initial position is the first displacement
    for (int t = 0; t + 1 < n_days; ++t) {
      const double b = uniform_from_bits(branch_stream.word_at(word++));
      if (b < theta.p0) {
        y(i, t + 1) = y(i, t) + steps[i * n_days + t + 1];
      } else {
        const double u = uniform_from_bits(branch_stream.word_at(word++));
        const int back = std::min(t, static_cast<int>(u * (t + 1)));
        y(i, t + 1) = y(i, back);
      }
    }
  }
  return y;
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  if (sorted.empty()) throw Error("quantile_sorted: empty data");
  if (sorted.size() == 1) return sorted[0];
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ToadSummary toad_summaries(const Eigen::MatrixXd& y, const std::array<int, 4>& lags,
                           double threshold) {
  const int n_toads = static_cast<int>(y.rows());
  const int n_days = static_cast<int>(y.cols());
  ToadSummary out;
  out.values = Eigen::VectorXd::Zero(48);
  int slot = 0;
  for (const int lag : lags) {
    if (lag >= n_days) throw Error("toad_summaries: lag must be smaller than D");
    std::vector<double> moved;
    moved.reserve(static_cast<std::size_t>(n_toads) * (n_days - lag));
    std::int64_t returns = 0;
    for (int i = 0; i < n_toads; ++i)
      for (int t = 0; t + lag < n_days; ++t) {
        const double disp = std::abs(y(i, t + lag) - y(i, t));
        if (disp <= threshold)
          ++returns;
        else
          moved.push_back(disp);
      }
    out.values[slot] = static_cast<double>(returns);
    if (moved.size() < 2) {
      out.degenerate = true;
      slot += 12;
      continue;
    }
    std::sort(moved.begin(), moved.end());
    out.values[slot + 1] = quantile_sorted(moved, 0.5);
    for (int q = 0; q < 10; ++q) {
      const double a = quantile_sorted(moved, 0.1 * q);
      const double b = quantile_sorted(moved, 0.1 * (q + 1));
      const double diff = b - a;
      if (diff <= 0.0) {
        out.degenerate = true;
        out.values[slot + 2 + q] = -HUGE_VAL;
      } else {
        out.values[slot + 2 + q] = std::log(diff);
      }
    }
    slot += 12;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bayesian synthetic likelihood
// ---------------------------------------------------------------------------

BslToadTarget::BslToadTarget(ToadConfig config, Eigen::VectorXd s_obs)
    : config_(config), s_obs_(std::move(s_obs)) {
  if (s_obs_.size() != 48) throw DimensionMismatch("bsl target: observed summary must be 48-dim");
  if (config_.replicates < 2) throw Error("bsl target: need P >= 2 replicates");
}

BslToadTarget BslToadTarget::from_simulation(ToadConfig config, const Theta& theta_star,
                                             RngStream obs_stream) {
  const Eigen::MatrixXd y =
      toad_simulate(theta_star, config.n_toads, config.n_days, obs_stream);
  const ToadSummary s = toad_summaries(y, config.lags, config.return_threshold);
  if (s.degenerate)
    throw DegenerateData("bsl target: observed dataset has a degenerate summary");
  return BslToadTarget(config, s.values);
}

double BslToadTarget::synthetic_loglik(const Theta& theta, RngStream noise) const {
  const int p = config_.replicates;
  const int dim_s = 48;
  Eigen::MatrixXd summaries(p, dim_s);
  for (int r = 0; r < p; ++r) {
    RngStream sim_stream = noise.substream(static_cast<std::uint64_t>(r));
    const Eigen::MatrixXd y =
        toad_simulate(theta, config_.n_toads, config_.n_days, sim_stream);
    const ToadSummary s = toad_summaries(y, config_.lags, config_.return_threshold);
    if (s.degenerate) return -HUGE_VAL;
    summaries.row(r) = s.values;
  }

  const Eigen::VectorXd mean = summaries.colwise().mean();
  Eigen::MatrixXd centered = summaries.rowwise() - mean.transpose();
  Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(p - 1);
  const Eigen::VectorXd var = cov.diagonal();
  if (!(var.array() > 0.0).all()) return -HUGE_VAL;

  // Warton shrinkage: D^{1/2} (g C + (1-g) I) D^{1/2} with C the sample
  // correlation and D the diagonal of sample variances.
  const Eigen::ArrayXd sd = var.array().sqrt();
  Eigen::MatrixXd corr = cov;
  corr.array().colwise() /= sd;
  corr.array().rowwise() /= sd.transpose();
  const double g = config_.shrinkage;
  Eigen::MatrixXd shrunk = g * corr;
  shrunk.diagonal().array() += 1.0 - g;
  Eigen::MatrixXd sigma = shrunk;
  sigma.array().colwise() *= sd;
  sigma.array().rowwise() *= sd.transpose();

  Eigen::MatrixXd chol;
  try {
    chol = cholesky(SymMatrix(sigma));
  } catch (const NotPositiveDefinite&) {
    return -HUGE_VAL;
  }
  const Eigen::VectorXd u = tri_solve(chol, s_obs_ - mean, false);
  return -0.5 * dim_s * kLogTwoPi - chol.diagonal().array().log().sum() -
         0.5 * u.squaredNorm();
}

double BslToadTarget::log_density(const Eigen::Ref<const Eigen::VectorXd>& theta,
                                  RngStream noise) const {
  if (theta.size() != 3) throw DimensionMismatch("bsl target: theta must be 3-dim");
  for (int j = 0; j < 3; ++j)
    if (theta[j] < kThetaLo[j] || theta[j] > kThetaHi[j]) return -HUGE_VAL;
  return synthetic_loglik(Theta{theta[0], theta[1], theta[2]}, noise);
}

BslToadLogitTarget::BslToadLogitTarget(ToadConfig config, Eigen::VectorXd s_obs)
    : base_(config, std::move(s_obs)) {}

BslToadLogitTarget BslToadLogitTarget::from_simulation(ToadConfig config,
                                                       const Theta& theta_star,
                                                       RngStream obs_stream) {
  BslToadTarget base = BslToadTarget::from_simulation(config, theta_star, obs_stream);
  return BslToadLogitTarget(base.config(), base.observed_summary());
}

double BslToadLogitTarget::log_density(const Eigen::Ref<const Eigen::VectorXd>& xi,
                                       RngStream noise) const {
  if (xi.size() != 3) throw DimensionMismatch("bsl logit target: xi must be 3-dim");
  const Eigen::Vector3d lo(kThetaLo[0], kThetaLo[1], kThetaLo[2]);
  const Eigen::Vector3d hi(kThetaHi[0], kThetaHi[1], kThetaHi[2]);
  const Eigen::VectorXd theta = logit_reparam_inverse(xi, lo, hi);
  const double jac = logit_reparam_log_jacobian(xi, lo, hi);
  const double ll = base_.synthetic_loglik(Theta{theta[0], theta[1], theta[2]}, noise);
  return ll == -HUGE_VAL ? -HUGE_VAL : ll + jac;
}

Eigen::VectorXd logit_reparam(const Eigen::VectorXd& theta, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi) {
  if (theta.size() != lo.size() || theta.size() != hi.size())
    throw DimensionMismatch("logit_reparam: size mismatch");
  Eigen::VectorXd xi(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    const double u = (theta[j] - lo[j]) / (hi[j] - lo[j]);
    if (u <= 0.0 || u >= 1.0)
      throw DomainViolation("logit_reparam: theta must be strictly inside the box");
    xi[j] = std::log(u / (1.0 - u));
  }
  return xi;
}

Eigen::VectorXd logit_reparam_inverse(const Eigen::VectorXd& xi, const Eigen::VectorXd& lo,
                                      const Eigen::VectorXd& hi) {
  Eigen::VectorXd theta(xi.size());
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    const double u = 1.0 / (1.0 + std::exp(-xi[j]));
    theta[j] = lo[j] + (hi[j] - lo[j]) * u;
  }
  return theta;
}

double logit_reparam_log_jacobian(const Eigen::VectorXd& xi, const Eigen::VectorXd& lo,
                                  const Eigen::VectorXd& hi) {
  double out = 0.0;
  for (Eigen::Index j = 0; j < xi.size(); ++j) {
    // log(b sigma(xi) (1 - sigma(xi))) computed overflow-free
    out += std::log(hi[j] - lo[j]) + log_sigmoid(xi[j]) + log_sigmoid(-xi[j]);
  }
  return out;
}

}  // namespace lsvi
