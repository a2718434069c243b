#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "lsvi/rng.hpp"

namespace lsvi {

// Unnormalized log target density f = log pi. Evaluations receive an owned
// noise stream derived from (iteration, sample index), so noisy targets
// (synthetic likelihoods, subsampled likelihoods) stay reproducible under any
// evaluation order or thread count. Deterministic targets ignore the stream.
class Target {
 public:
  virtual ~Target() = default;

  virtual int dim() const = 0;

  virtual double log_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                             RngStream noise) const = 0;

  // Evaluate one row of `x` per output entry; sample i consumes
  // noise_base.substream(i). The default loops; dense deterministic targets
  // override it with a vectorized pass.
  virtual void log_density_batch(const Eigen::MatrixXd& x, const RngStream& noise_base,
                                 Eigen::VectorXd& out) const;

  // Called once at the start of every outer iteration; targets that redraw a
  // minibatch per iteration do so here.
  virtual void begin_iteration(std::uint64_t /*t*/, RngStream /*stream*/) {}

  virtual bool is_noisy() const { return false; }
};

// Adapter for plain callables f(x); deterministic.
template <typename Fn>
class FunctionTarget final : public Target {
 public:
  FunctionTarget(int d, Fn fn) : d_(d), fn_(std::move(fn)) {}
  int dim() const override { return d_; }
  double log_density(const Eigen::Ref<const Eigen::VectorXd>& x,
                     RngStream /*noise*/) const override {
    return fn_(x);
  }

 private:
  int d_;
  Fn fn_;
};

template <typename Fn>
FunctionTarget<Fn> make_target(int d, Fn fn) {
  return FunctionTarget<Fn>(d, std::move(fn));
}

}  // namespace lsvi
