#include "lsvi/expfam.hpp"

#include <cmath>
#include <sstream>

#include "lsvi/parallel.hpp"

namespace lsvi {

namespace {

constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
constexpr double kProbClamp = 1e-12;   // Bernoulli q clamp when mapping to eta
constexpr double kCdfClamp = 1e-15;    // Phi clamp for truncated sampling

double logistic(double u) { return 1.0 / (1.0 + std::exp(-u)); }

void format_full(std::ostringstream& os, double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << buf;
}

}  // namespace

Eigen::VectorXd Family::suff_stat(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out(statistic_size());
  suff_stat(x, out);
  return out;
}

void Family::check_eta(const Eigen::VectorXd& eta) const {
  if (eta.size() != statistic_size())
    throw DimensionMismatch(name() + ": eta has length " + std::to_string(eta.size()) +
                            ", expected " + std::to_string(statistic_size()));
  if (!in_domain(eta)) throw DomainViolation(name() + ": eta outside the natural domain");
}

void Family::log_density_batch(const Eigen::VectorXd& eta, const Eigen::MatrixXd& x,
                               Eigen::VectorXd& out) const {
  const std::int64_t n = x.rows();
  out.resize(n);
  for (std::int64_t i = 0; i < n; ++i) out[i] = log_density(eta, x.row(i).transpose());
}

// ---------------------------------------------------------------------------
// Full-covariance Gaussian
// ---------------------------------------------------------------------------

FullCovGaussian::FullCovGaussian(int d) : d_(d) {
  if (d < 1) throw DimensionMismatch("full_cov: d must be >= 1");
}

void FullCovGaussian::suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                                Eigen::Ref<Eigen::VectorXd> out) const {
  if (x.size() != d_ || out.size() != statistic_size())
    throw DimensionMismatch("full_cov suff_stat: bad sizes");
  out[0] = 1.0;
  out.segment(1, d_) = x;
  // vec(x x^T), column-major
  for (int j = 0; j < d_; ++j) out.segment(1 + d_ + j * d_, d_) = x * x[j];
}

Eigen::MatrixXd FullCovGaussian::quad_matrix(const Eigen::VectorXd& eta) const {
  const Eigen::MatrixXd m = unvec(eta.segment(1 + d_, d_ * d_), d_);
  return 0.5 * (m + m.transpose());
}

bool FullCovGaussian::in_domain(const Eigen::VectorXd& eta) const {
  if (eta.size() != statistic_size()) return false;
  if (!eta.allFinite()) return false;
  try {
    cholesky(SymMatrix(-quad_matrix(eta)));
  } catch (const NotPositiveDefinite&) {
    return false;
  }
  return true;
}

void FullCovGaussian::mean_cov(const Eigen::VectorXd& eta, Eigen::VectorXd& mu,
                               Eigen::MatrixXd& sigma) const {
  check_eta(eta);
  const Eigen::MatrixXd a = -2.0 * quad_matrix(eta);  // = Sigma^{-1}, SPD
  const Eigen::MatrixXd l = cholesky(SymMatrix(a));
  // Sigma = A^{-1} column by column
  sigma.resize(d_, d_);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d_, d_);
  for (int j = 0; j < d_; ++j)
    sigma.col(j) = tri_solve(l, tri_solve(l, eye.col(j), false), true);
  sigma = 0.5 * (sigma + sigma.transpose()).eval();
  mu = tri_solve(l, tri_solve(l, eta.segment(1, d_), false), true);
}

Eigen::VectorXd FullCovGaussian::eta_from_mean_cov(const Eigen::VectorXd& mu,
                                                   const Eigen::MatrixXd& sigma) const {
  if (mu.size() != d_ || sigma.rows() != d_ || sigma.cols() != d_)
    throw DimensionMismatch("full_cov: bad canonical sizes");
  const Eigen::MatrixXd l = cholesky(SymMatrix(sigma));  // throws if not SPD
  Eigen::MatrixXd prec(d_, d_);
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d_, d_);
  for (int j = 0; j < d_; ++j)
    prec.col(j) = tri_solve(l, tri_solve(l, eye.col(j), false), true);
  prec = 0.5 * (prec + prec.transpose()).eval();
  Eigen::VectorXd eta(statistic_size());
  eta[0] = 0.0;
  eta.segment(1, d_) = prec * mu;
  eta.segment(1 + d_, d_ * d_) = vec(-0.5 * prec);
  return eta;
}

Eigen::VectorXd FullCovGaussian::to_canonical(const Eigen::VectorXd& eta) const {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  mean_cov(eta, mu, sigma);
  Eigen::VectorXd c(d_ + d_ * (d_ + 1) / 2);
  c.head(d_) = mu;
  for_each_upper(d_, [&](int i, int j, int idx) { c[d_ + idx] = sigma(i, j); });
  return c;
}

Eigen::VectorXd FullCovGaussian::from_canonical(const Eigen::VectorXd& canonical) const {
  if (canonical.size() != d_ + d_ * (d_ + 1) / 2)
    throw DimensionMismatch("full_cov: bad canonical length");
  Eigen::MatrixXd sigma(d_, d_);
  for_each_upper(d_, [&](int i, int j, int idx) {
    sigma(i, j) = canonical[d_ + idx];
    sigma(j, i) = canonical[d_ + idx];
  });
  return eta_from_mean_cov(canonical.head(d_), sigma);
}

std::vector<std::string> FullCovGaussian::canonical_labels() const {
  std::vector<std::string> out;
  for (int i = 0; i < d_; ++i) out.push_back("mu" + std::to_string(i));
  for_each_upper(d_, [&](int i, int j, int) {
    out.push_back("S" + std::to_string(i) + "_" + std::to_string(j));
  });
  return out;
}

Eigen::MatrixXd FullCovGaussian::sample(const Eigen::VectorXd& eta, int n,
                                        RngStream& stream) const {
  check_eta(eta);
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  mean_cov(eta, mu, sigma);
  const Eigen::MatrixXd c = cholesky(SymMatrix(sigma));
  Eigen::MatrixXd z = draw_standard_normal(stream, n, d_);
  Eigen::MatrixXd x = z * c.transpose();
  x.rowwise() += mu.transpose();
  return x;
}

double FullCovGaussian::log_density(const Eigen::VectorXd& eta,
                                    const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  mean_cov(eta, mu, sigma);
  const Eigen::MatrixXd c = cholesky(SymMatrix(sigma));
  const Eigen::VectorXd w = tri_solve(c, x - mu, false);
  return -0.5 * d_ * kLogTwoPi - c.diagonal().array().log().sum() - 0.5 * w.squaredNorm();
}

void FullCovGaussian::log_density_batch(const Eigen::VectorXd& eta, const Eigen::MatrixXd& x,
                                        Eigen::VectorXd& out) const {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  mean_cov(eta, mu, sigma);
  const Eigen::MatrixXd c = cholesky(SymMatrix(sigma));
  const double base = -0.5 * d_ * kLogTwoPi - c.diagonal().array().log().sum();
  Eigen::MatrixXd w = (x.rowwise() - mu.transpose()).transpose();  // d x N
  c.triangularView<Eigen::Lower>().solveInPlace(w);
  out = (base - 0.5 * w.array().square().colwise().sum().transpose()).matrix();
}

// ---------------------------------------------------------------------------
// Mean-field Gaussian
// ---------------------------------------------------------------------------

MeanFieldGaussian::MeanFieldGaussian(int d) : d_(d) {
  if (d < 1) throw DimensionMismatch("mean_field: d must be >= 1");
}

void MeanFieldGaussian::suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  Eigen::Ref<Eigen::VectorXd> out) const {
  if (x.size() != d_ || out.size() != statistic_size())
    throw DimensionMismatch("mean_field suff_stat: bad sizes");
  out[0] = 1.0;
  out.segment(1, d_) = x;
  out.segment(1 + d_, d_) = x.array().square();
}

bool MeanFieldGaussian::in_domain(const Eigen::VectorXd& eta) const {
  if (eta.size() != statistic_size()) return false;
  if (!eta.allFinite()) return false;
  return (eta.segment(1 + d_, d_).array() < 0.0).all();
}

void MeanFieldGaussian::mean_var(const Eigen::VectorXd& eta, Eigen::VectorXd& mu,
                                 Eigen::VectorXd& sigma2) const {
  check_eta(eta);
  const auto eta1 = eta.segment(1, d_).array();
  const auto eta2 = eta.segment(1 + d_, d_).array();
  sigma2 = (-0.5 / eta2).matrix();
  mu = (-0.5 * eta1 / eta2).matrix();
}

Eigen::VectorXd MeanFieldGaussian::eta_from_mean_var(const Eigen::VectorXd& mu,
                                                     const Eigen::VectorXd& sigma2) const {
  if (mu.size() != d_ || sigma2.size() != d_)
    throw DimensionMismatch("mean_field: bad canonical sizes");
  if (!(sigma2.array() > 0.0).all())
    throw DomainViolation("mean_field: sigma^2 must be positive");
  Eigen::VectorXd eta(statistic_size());
  eta[0] = 0.0;
  eta.segment(1, d_) = (mu.array() / sigma2.array()).matrix();
  eta.segment(1 + d_, d_) = (-0.5 / sigma2.array()).matrix();
  return eta;
}

Eigen::VectorXd MeanFieldGaussian::to_canonical(const Eigen::VectorXd& eta) const {
  Eigen::VectorXd mu, sigma2;
  mean_var(eta, mu, sigma2);
  Eigen::VectorXd c(2 * d_);
  c.head(d_) = mu;
  c.tail(d_) = sigma2;
  return c;
}

Eigen::VectorXd MeanFieldGaussian::from_canonical(const Eigen::VectorXd& canonical) const {
  if (canonical.size() != 2 * d_) throw DimensionMismatch("mean_field: bad canonical length");
  return eta_from_mean_var(canonical.head(d_), canonical.tail(d_));
}

std::vector<std::string> MeanFieldGaussian::canonical_labels() const {
  std::vector<std::string> out;
  for (int i = 0; i < d_; ++i) out.push_back("mu" + std::to_string(i));
  for (int i = 0; i < d_; ++i) out.push_back("var" + std::to_string(i));
  return out;
}

Eigen::MatrixXd MeanFieldGaussian::sample(const Eigen::VectorXd& eta, int n,
                                          RngStream& stream) const {
  Eigen::VectorXd mu, sigma2;
  mean_var(eta, mu, sigma2);
  const Eigen::ArrayXd sd = sigma2.array().sqrt();
  Eigen::MatrixXd z = draw_standard_normal(stream, n, d_);
  z.array().rowwise() *= sd.transpose();
  z.rowwise() += mu.transpose();
  return z;
}

double MeanFieldGaussian::log_density(const Eigen::VectorXd& eta,
                                      const Eigen::Ref<const Eigen::VectorXd>& x) const {
  Eigen::VectorXd mu, sigma2;
  mean_var(eta, mu, sigma2);
  const Eigen::ArrayXd z2 = (x - mu).array().square() / sigma2.array();
  return -0.5 * d_ * kLogTwoPi - 0.5 * sigma2.array().log().sum() - 0.5 * z2.sum();
}

void MeanFieldGaussian::log_density_batch(const Eigen::VectorXd& eta, const Eigen::MatrixXd& x,
                                          Eigen::VectorXd& out) const {
  Eigen::VectorXd mu, sigma2;
  mean_var(eta, mu, sigma2);
  const double base = -0.5 * d_ * kLogTwoPi - 0.5 * sigma2.array().log().sum();
  const Eigen::ArrayXXd z2 = (x.rowwise() - mu.transpose()).array().square().rowwise() /
                             sigma2.transpose().array();
  out = (base - 0.5 * z2.rowwise().sum()).matrix();
}

// ---------------------------------------------------------------------------
// Truncated mean-field Gaussian
// ---------------------------------------------------------------------------

TruncatedMeanField::TruncatedMeanField(Eigen::VectorXd lo, Eigen::VectorXd hi)
    : d_(static_cast<int>(lo.size())), lo_(std::move(lo)), hi_(std::move(hi)) {
  if (d_ < 1 || hi_.size() != d_) throw DimensionMismatch("truncated_mf: bad box sizes");
  if (!((hi_ - lo_).array() > 0.0).all())
    throw DimensionMismatch("truncated_mf: box must have positive widths");
}

void TruncatedMeanField::suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                                   Eigen::Ref<Eigen::VectorXd> out) const {
  if (x.size() != d_ || out.size() != statistic_size())
    throw DimensionMismatch("truncated_mf suff_stat: bad sizes");
  out[0] = 1.0;
  out.segment(1, d_) = x;
  out.segment(1 + d_, d_) = x.array().square();
}

bool TruncatedMeanField::in_domain(const Eigen::VectorXd& eta) const {
  if (eta.size() != statistic_size()) return false;
  if (!eta.allFinite()) return false;
  return (eta.segment(1 + d_, d_).array() < 0.0).all();
}

Eigen::VectorXd TruncatedMeanField::to_canonical(const Eigen::VectorXd& eta) const {
  check_eta(eta);
  const auto eta1 = eta.segment(1, d_).array();
  const auto eta2 = eta.segment(1 + d_, d_).array();
  Eigen::VectorXd c(2 * d_);
  c.tail(d_) = (-0.5 / eta2).matrix();
  c.head(d_) = (-0.5 * eta1 / eta2).matrix();
  return c;
}

Eigen::VectorXd TruncatedMeanField::from_canonical(const Eigen::VectorXd& canonical) const {
  if (canonical.size() != 2 * d_) throw DimensionMismatch("truncated_mf: bad canonical length");
  const auto mu = canonical.head(d_).array();
  const auto sigma2 = canonical.tail(d_).array();
  if (!(sigma2 > 0.0).all()) throw DomainViolation("truncated_mf: sigma^2 must be positive");
  Eigen::VectorXd eta(statistic_size());
  eta[0] = 0.0;
  eta.segment(1, d_) = (mu / sigma2).matrix();
  eta.segment(1 + d_, d_) = (-0.5 / sigma2).matrix();
  return eta;
}

std::vector<std::string> TruncatedMeanField::canonical_labels() const {
  std::vector<std::string> out;
  for (int i = 0; i < d_; ++i) out.push_back("mu" + std::to_string(i));
  for (int i = 0; i < d_; ++i) out.push_back("var" + std::to_string(i));
  return out;
}

Eigen::MatrixXd TruncatedMeanField::sample(const Eigen::VectorXd& eta, int n,
                                           RngStream& stream) const {
  const Eigen::VectorXd c = to_canonical(eta);
  const Eigen::ArrayXd mu = c.head(d_).array();
  const Eigen::ArrayXd sd = c.tail(d_).array().sqrt();
  const Eigen::ArrayXd alpha = (lo_.array() - mu) / sd;
  const Eigen::ArrayXd beta = (hi_.array() - mu) / sd;
  Eigen::ArrayXd cdf_lo(d_), cdf_hi(d_);
  for (int j = 0; j < d_; ++j) {
    cdf_lo[j] = norm_cdf(alpha[j]);
    cdf_hi[j] = norm_cdf(beta[j]);
  }
  Eigen::MatrixXd out(n, d_);
  const RngStream base = stream.fork(0x74727563u);
  parallel_for(n, [&](std::ptrdiff_t i) {
    const RngStream rs = base.substream(static_cast<std::uint64_t>(i));
    for (int j = 0; j < d_; ++j) {
      const double uu = uniform_from_bits(rs.word_at(j));
      double p = cdf_lo[j] + uu * (cdf_hi[j] - cdf_lo[j]);
      p = std::min(1.0 - kCdfClamp, std::max(kCdfClamp, p));
      double x = mu[j] + sd[j] * inv_norm_cdf(p);
      out(i, j) = std::min(hi_[j], std::max(lo_[j], x));
    }
  });
  return out;
}

double TruncatedMeanField::log_density(const Eigen::VectorXd& eta,
                                       const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd c = to_canonical(eta);
  const Eigen::ArrayXd mu = c.head(d_).array();
  const Eigen::ArrayXd sigma2 = c.tail(d_).array();
  const Eigen::ArrayXd sd = sigma2.sqrt();
  for (int j = 0; j < d_; ++j)
    if (x[j] < lo_[j] || x[j] > hi_[j]) return -HUGE_VAL;
  double out = -0.5 * d_ * kLogTwoPi - 0.5 * sigma2.log().sum();
  out -= 0.5 * ((x.array() - mu).square() / sigma2).sum();
  for (int j = 0; j < d_; ++j) {
    const double z = std::max(norm_cdf((hi_[j] - mu[j]) / sd[j]) -
                                  norm_cdf((lo_[j] - mu[j]) / sd[j]),
                              kCdfClamp);
    out -= std::log(z);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Bernoulli product
// ---------------------------------------------------------------------------

BernoulliProduct::BernoulliProduct(int d) : d_(d) {
  if (d < 1) throw DimensionMismatch("bernoulli: d must be >= 1");
}

void BernoulliProduct::suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                                 Eigen::Ref<Eigen::VectorXd> out) const {
  if (x.size() != d_ || out.size() != statistic_size())
    throw DimensionMismatch("bernoulli suff_stat: bad sizes");
  out[0] = 1.0;
  out.segment(1, d_) = x;
}

bool BernoulliProduct::in_domain(const Eigen::VectorXd& eta) const {
  return eta.size() == statistic_size() && eta.allFinite();
}

Eigen::VectorXd BernoulliProduct::probs(const Eigen::VectorXd& eta) const {
  check_eta(eta);
  Eigen::VectorXd q(d_);
  for (int j = 0; j < d_; ++j) q[j] = logistic(eta[1 + j]);
  return q;
}

Eigen::VectorXd BernoulliProduct::to_canonical(const Eigen::VectorXd& eta) const {
  return probs(eta);
}

Eigen::VectorXd BernoulliProduct::from_canonical(const Eigen::VectorXd& canonical) const {
  if (canonical.size() != d_) throw DimensionMismatch("bernoulli: bad canonical length");
  if (!((canonical.array() >= 0.0) && (canonical.array() <= 1.0)).all())
    throw DomainViolation("bernoulli: q must lie in [0,1]");
  Eigen::VectorXd eta(statistic_size());
  eta[0] = 0.0;
  for (int j = 0; j < d_; ++j) {
    const double q = std::min(1.0 - kProbClamp, std::max(kProbClamp, canonical[j]));
    eta[1 + j] = std::log(q / (1.0 - q));
  }
  return eta;
}

std::vector<std::string> BernoulliProduct::canonical_labels() const {
  std::vector<std::string> out;
  for (int i = 0; i < d_; ++i) out.push_back("q" + std::to_string(i));
  return out;
}

Eigen::MatrixXd BernoulliProduct::sample(const Eigen::VectorXd& eta, int n,
                                         RngStream& stream) const {
  const Eigen::VectorXd q = probs(eta);
  Eigen::MatrixXd out(n, d_);
  const RngStream base = stream.fork(0x6265726eu);
  parallel_for(n, [&](std::ptrdiff_t i) {
    const RngStream rs = base.substream(static_cast<std::uint64_t>(i));
    for (int j = 0; j < d_; ++j)
      out(i, j) = uniform_from_bits(rs.word_at(j)) < q[j] ? 1.0 : 0.0;
  });
  return out;
}

double BernoulliProduct::log_density(const Eigen::VectorXd& eta,
                                     const Eigen::Ref<const Eigen::VectorXd>& x) const {
  const Eigen::VectorXd q = probs(eta);
  double out = 0.0;
  for (int j = 0; j < d_; ++j) {
    const double qj = std::min(1.0 - kProbClamp, std::max(kProbClamp, q[j]));
    out += x[j] > 0.5 ? std::log(qj) : std::log1p(-qj);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text record
// ---------------------------------------------------------------------------

std::string canonical_to_record(const Family& family, const Eigen::VectorXd& canonical) {
  std::ostringstream os;
  os << family.name() << ' ' << family.dim();
  for (Eigen::Index i = 0; i < canonical.size(); ++i) {
    os << ' ';
    format_full(os, canonical[i]);
  }
  return os.str();
}

ParsedRecord parse_canonical_record(const std::string& line) {
  std::istringstream is(line);
  ParsedRecord rec;
  if (!(is >> rec.family >> rec.d) || rec.d < 1)
    throw ParseError("canonical record: expected `family d values...`");
  std::vector<double> vals;
  double v;
  while (is >> v) vals.push_back(v);
  rec.canonical = Eigen::Map<const Eigen::VectorXd>(vals.data(), vals.size());
  return rec;
}

}  // namespace lsvi
