#include "lsvi/linalg.hpp"

#include <cassert>
#include <cmath>
#include <string>

namespace lsvi {

SymMatrix::SymMatrix(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols() || a.rows() < 1)
    throw DimensionMismatch("SymMatrix: need square matrix of dim >= 1, got " +
                            std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
  m_ = 0.5 * (a + a.transpose());
}

SymMatrix SymMatrix::identity(int d) {
  SymMatrix s;
  s.m_ = Eigen::MatrixXd::Identity(d, d);
  return s;
}

SymMatrix SymMatrix::from_symmetric(Eigen::MatrixXd a) {
  assert(a == a.transpose());
  SymMatrix s;
  s.m_ = std::move(a);
  return s;
}

Eigen::MatrixXd cholesky(const SymMatrix& a) {
  const int d = a.dim();
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(d, d);
  const Eigen::MatrixXd& m = a.mat();
  for (int j = 0; j < d; ++j) {
    double diag = m(j, j);
    for (int k = 0; k < j; ++k) diag -= l(j, k) * l(j, k);
    if (!(diag > 0.0))  // catches <= 0 and NaN
      throw NotPositiveDefinite("cholesky: leading minor " + std::to_string(j + 1) +
                                " not positive");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (int i = j + 1; i < d; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
  return l;
}

Eigen::VectorXd tri_solve(const Eigen::MatrixXd& lower, const Eigen::VectorXd& b,
                          bool transpose) {
  if (lower.rows() != lower.cols() || lower.rows() != b.size())
    throw DimensionMismatch("tri_solve: L is " + std::to_string(lower.rows()) + "x" +
                            std::to_string(lower.cols()) + ", b has length " +
                            std::to_string(b.size()));
  if (transpose)
    return lower.transpose().triangularView<Eigen::Upper>().solve(b);
  return lower.triangularView<Eigen::Lower>().solve(b);
}

Eigen::VectorXd vec(const Eigen::MatrixXd& u) {
  return Eigen::Map<const Eigen::VectorXd>(u.data(), u.size());
}

Eigen::MatrixXd unvec(const Eigen::VectorXd& v, int d) {
  if (d < 1 || v.size() != static_cast<Eigen::Index>(d) * d)
    throw DimensionMismatch("unvec: length " + std::to_string(v.size()) +
                            " is not " + std::to_string(d) + "^2");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), d, d);
}

int vech_index(int i, int k, int d) {
  if (i < 1 || i > d || k < 0 || k > d - i)
    throw DimensionMismatch("vech_index: (i=" + std::to_string(i) + ", k=" +
                            std::to_string(k) + ") out of range for d=" + std::to_string(d));
  return 1 + ((2 * d + 2 - i) * (i - 1)) / 2 + k;
}

Eigen::VectorXd ols_solve(const SymMatrix& f_hat, const Eigen::VectorXd& z_hat,
                          double ridge) {
  if (f_hat.dim() != z_hat.size())
    throw DimensionMismatch("ols_solve: F is " + std::to_string(f_hat.dim()) +
                            "-dim, z has length " + std::to_string(z_hat.size()));
  if (ridge < 0.0) throw Error("ols_solve: ridge must be >= 0");
  Eigen::MatrixXd a = f_hat.mat();
  if (ridge > 0.0) a.diagonal().array() += ridge;
  Eigen::MatrixXd l;
  try {
    l = cholesky(SymMatrix::from_symmetric(std::move(a)));
  } catch (const NotPositiveDefinite&) {
    throw SingularDesign("ols_solve: design matrix singular (rank-deficient or N < m)");
  }
  return tri_solve(l, tri_solve(l, z_hat, false), true);
}

}  // namespace lsvi
