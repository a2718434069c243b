#pragma once

#include <Eigen/Core>

#include "lsvi/errors.hpp"

namespace lsvi {

// Dense symmetric matrix; the lower triangle is authoritative and the
// constructor symmetrizes, so accumulated float asymmetry in inputs cannot
// leak into factorizations.
class SymMatrix {
 public:
  explicit SymMatrix(const Eigen::MatrixXd& a);
  static SymMatrix identity(int d);
  // Adopts `a` as-is; caller guarantees exact symmetry (e.g. rankUpdate output
  // mirrored). Checked in debug builds only.
  static SymMatrix from_symmetric(Eigen::MatrixXd a);

  int dim() const { return static_cast<int>(m_.rows()); }
  double operator()(int i, int j) const { return m_(i, j); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double trace() const { return m_.trace(); }

 private:
  SymMatrix() = default;
  Eigen::MatrixXd m_;
};

// Lower-triangular Cholesky factor L with L L^T = A and strictly positive
// diagonal. Throws NotPositiveDefinite when a leading minor is <= 0; callers
// interpret that as eta outside the natural domain or a singular design.
Eigen::MatrixXd cholesky(const SymMatrix& a);

// Solve L x = b (transpose=false) or L^T x = b (transpose=true) for
// lower-triangular L.
Eigen::VectorXd tri_solve(const Eigen::MatrixXd& lower, const Eigen::VectorXd& b,
                          bool transpose = false);

// Column-major stacking and its inverse.
Eigen::VectorXd vec(const Eigen::MatrixXd& u);
Eigen::MatrixXd unvec(const Eigen::VectorXd& v, int d);

// 1-based linear index of the (i, i+k) entry in the row-major upper-triangle
// half-vectorization: index = 1 + (2d+2-i)(i-1)/2 + k, for 1 <= i <= d and
// 0 <= k <= d-i. This single formula is shared by the quadratic statistic,
// the Gamma assembly and the gamma<->beta maps.
int vech_index(int i, int k, int d);

// Visit the upper triangle in the emission order of the half-vectorization:
// fn(i0, j0, idx0) with 0-based row i0, column j0 >= i0 and 0-based slot idx0.
template <typename Fn>
inline void for_each_upper(int d, Fn&& fn) {
  int idx = 0;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) fn(i, j, idx++);
}

// (F + ridge I)^{-1} z via Cholesky. Throws SingularDesign when the
// regularized matrix is not positive definite.
Eigen::VectorXd ols_solve(const SymMatrix& f_hat, const Eigen::VectorXd& z_hat,
                          double ridge = 0.0);

}  // namespace lsvi
