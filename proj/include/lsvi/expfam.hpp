#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lsvi/linalg.hpp"
#include "lsvi/rng.hpp"

namespace lsvi {

// Natural parameter eta = (eta0, etabar) for one family member. The first
// coordinate is an intercept: it never affects sampling, domain membership
// or the normalized log-density.
//
// Statistic layouts (first component always 1):
//   full covariance Gaussian  s(x) = (1, x, vec(x x^T)),  m = 1 + d + d^2
//   mean-field Gaussian       s(x) = (1, x, x^2),         m = 1 + 2d
//   truncated mean-field      same as mean-field
//   Bernoulli product         s(x) = (1, x),              m = 1 + d
class Family {
 public:
  virtual ~Family() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;             // d
  virtual int statistic_size() const = 0;  // m

  virtual void suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                         Eigen::Ref<Eigen::VectorXd> out) const = 0;
  Eigen::VectorXd suff_stat(const Eigen::VectorXd& x) const;

  virtual bool in_domain(const Eigen::VectorXd& eta) const = 0;

  // Flat canonical coordinates:
  //   full_cov:     mu (d), Sigma lower triangle row-major (d(d+1)/2)
  //   mean_field*:  mu (d), sigma^2 (d)
  //   bernoulli:    q (d)
  // from_canonical sets eta0 = 0.
  virtual Eigen::VectorXd to_canonical(const Eigen::VectorXd& eta) const = 0;
  virtual Eigen::VectorXd from_canonical(const Eigen::VectorXd& canonical) const = 0;
  virtual std::vector<std::string> canonical_labels() const = 0;
  int canonical_size() const { return static_cast<int>(canonical_labels().size()); }

  // N draws from the normalized density, one per row.
  virtual Eigen::MatrixXd sample(const Eigen::VectorXd& eta, int n, RngStream& stream) const = 0;

  // Normalized log-density log qbar_eta(x); independent of eta0.
  virtual double log_density(const Eigen::VectorXd& eta,
                             const Eigen::Ref<const Eigen::VectorXd>& x) const = 0;

  // One value per row of x. The default loops; Gaussian families override it
  // so per-call parameter factorizations happen once.
  virtual void log_density_batch(const Eigen::VectorXd& eta, const Eigen::MatrixXd& x,
                                 Eigen::VectorXd& out) const;

  void check_eta(const Eigen::VectorXd& eta) const;  // length + domain
};

class FullCovGaussian final : public Family {
 public:
  explicit FullCovGaussian(int d);
  std::string name() const override { return "full_cov"; }
  int dim() const override { return d_; }
  int statistic_size() const override { return 1 + d_ + d_ * d_; }
  using Family::suff_stat;
  void suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                 Eigen::Ref<Eigen::VectorXd> out) const override;
  bool in_domain(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd to_canonical(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd from_canonical(const Eigen::VectorXd& canonical) const override;
  std::vector<std::string> canonical_labels() const override;
  Eigen::MatrixXd sample(const Eigen::VectorXd& eta, int n, RngStream& stream) const override;
  double log_density(const Eigen::VectorXd& eta,
                     const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  void log_density_batch(const Eigen::VectorXd& eta, const Eigen::MatrixXd& x,
                         Eigen::VectorXd& out) const override;

  // Symmetrized unvec(eta2); shared by domain tests and conversions.
  Eigen::MatrixXd quad_matrix(const Eigen::VectorXd& eta) const;
  void mean_cov(const Eigen::VectorXd& eta, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) const;
  Eigen::VectorXd eta_from_mean_cov(const Eigen::VectorXd& mu, const Eigen::MatrixXd& sigma) const;

 private:
  int d_;
};

class MeanFieldGaussian final : public Family {
 public:
  explicit MeanFieldGaussian(int d);
  std::string name() const override { return "mean_field"; }
  int dim() const override { return d_; }
  int statistic_size() const override { return 1 + 2 * d_; }
  using Family::suff_stat;
  void suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                 Eigen::Ref<Eigen::VectorXd> out) const override;
  bool in_domain(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd to_canonical(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd from_canonical(const Eigen::VectorXd& canonical) const override;
  std::vector<std::string> canonical_labels() const override;
  Eigen::MatrixXd sample(const Eigen::VectorXd& eta, int n, RngStream& stream) const override;
  double log_density(const Eigen::VectorXd& eta,
                     const Eigen::Ref<const Eigen::VectorXd>& x) const override;
  void log_density_batch(const Eigen::VectorXd& eta, const Eigen::MatrixXd& x,
                         Eigen::VectorXd& out) const override;

  void mean_var(const Eigen::VectorXd& eta, Eigen::VectorXd& mu, Eigen::VectorXd& sigma2) const;
  Eigen::VectorXd eta_from_mean_var(const Eigen::VectorXd& mu, const Eigen::VectorXd& sigma2) const;

 private:
  int d_;
};

// Mean-field Gaussian truncated to the box [a, b]^d, coordinatewise. Kept as
// a strict sub-family with eta2 < 0 so the inverse-CDF sampler and the
// canonical conversion stay well posed.
class TruncatedMeanField final : public Family {
 public:
  TruncatedMeanField(Eigen::VectorXd lo, Eigen::VectorXd hi);
  std::string name() const override { return "truncated_mf"; }
  int dim() const override { return d_; }
  int statistic_size() const override { return 1 + 2 * d_; }
  using Family::suff_stat;
  void suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                 Eigen::Ref<Eigen::VectorXd> out) const override;
  bool in_domain(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd to_canonical(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd from_canonical(const Eigen::VectorXd& canonical) const override;
  std::vector<std::string> canonical_labels() const override;
  Eigen::MatrixXd sample(const Eigen::VectorXd& eta, int n, RngStream& stream) const override;
  double log_density(const Eigen::VectorXd& eta,
                     const Eigen::Ref<const Eigen::VectorXd>& x) const override;

  const Eigen::VectorXd& lower() const { return lo_; }
  const Eigen::VectorXd& upper() const { return hi_; }

 private:
  int d_;
  Eigen::VectorXd lo_, hi_;
};

class BernoulliProduct final : public Family {
 public:
  explicit BernoulliProduct(int d);
  std::string name() const override { return "bernoulli"; }
  int dim() const override { return d_; }
  int statistic_size() const override { return 1 + d_; }
  using Family::suff_stat;
  void suff_stat(const Eigen::Ref<const Eigen::VectorXd>& x,
                 Eigen::Ref<Eigen::VectorXd> out) const override;
  bool in_domain(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd to_canonical(const Eigen::VectorXd& eta) const override;
  Eigen::VectorXd from_canonical(const Eigen::VectorXd& canonical) const override;
  std::vector<std::string> canonical_labels() const override;
  Eigen::MatrixXd sample(const Eigen::VectorXd& eta, int n, RngStream& stream) const override;
  double log_density(const Eigen::VectorXd& eta,
                     const Eigen::Ref<const Eigen::VectorXd>& x) const override;

  Eigen::VectorXd probs(const Eigen::VectorXd& eta) const;

 private:
  int d_;
};

// Text record `family d values...` in full double precision.
std::string canonical_to_record(const Family& family, const Eigen::VectorXd& canonical);
// Parses the record; the returned family is reconstructed from the tag
// (truncated_mf needs the box supplied by the caller via `box_lo/box_hi`).
struct ParsedRecord {
  std::string family;
  int d = 0;
  Eigen::VectorXd canonical;
};
ParsedRecord parse_canonical_record(const std::string& line);

}  // namespace lsvi
