#include "lsvi/target.hpp"

#include "lsvi/parallel.hpp"

namespace lsvi {

void Target::log_density_batch(const Eigen::MatrixXd& x, const RngStream& noise_base,
                               Eigen::VectorXd& out) const {
  const std::int64_t n = x.rows();
  out.resize(n);
  parallel_for(n, [&](std::ptrdiff_t i) {
    out[i] = log_density(x.row(i).transpose(),
                         noise_base.substream(static_cast<std::uint64_t>(i)));
  });
}

}  // namespace lsvi
