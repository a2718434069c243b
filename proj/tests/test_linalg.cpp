#include <doctest.h>

#include <cmath>

#include "lsvi/linalg.hpp"
#include "lsvi/rng.hpp"

using namespace lsvi;

TEST_CASE("cholesky: identity, hand example, indefinite rejection") {
  const Eigen::MatrixXd li = cholesky(SymMatrix::identity(3));
  CHECK(li.isApprox(Eigen::MatrixXd::Identity(3, 3)));

  Eigen::MatrixXd a(2, 2);
  a << 4, 2, 2, 3;
  const Eigen::MatrixXd l = cholesky(SymMatrix(a));
  CHECK(l(0, 0) == doctest::Approx(2.0));
  CHECK(l(1, 0) == doctest::Approx(1.0));
  CHECK(l(1, 1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(l(0, 1) == 0.0);
  CHECK((l * l.transpose() - a).cwiseAbs().maxCoeff() < 1e-12 * a.cwiseAbs().maxCoeff());

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(cholesky(SymMatrix(bad)), NotPositiveDefinite);
}

TEST_CASE("cholesky: random SPD factorizations are accurate") {
  RngStream s(7, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 1 + static_cast<int>(s.next_uniform() * 8);
    const Eigen::MatrixXd m = draw_standard_normal(s, d, d);
    const Eigen::MatrixXd spd = m * m.transpose() + Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd l = cholesky(SymMatrix(spd));
    const double err = (l * l.transpose() - spd).cwiseAbs().maxCoeff();
    CHECK(err <= 1e-10 * spd.cwiseAbs().maxCoeff());
    CHECK((l.diagonal().array() > 0.0).all());
  }
}

TEST_CASE("tri_solve: identity, forward substitution, dimension check") {
  Eigen::VectorXd b(2);
  b << 3, -1;
  CHECK(tri_solve(Eigen::MatrixXd::Identity(2, 2), b) == b);

  Eigen::MatrixXd l(2, 2);
  l << 2, 0, 1, 1;
  Eigen::VectorXd rhs(2);
  rhs << 2, 3;
  const Eigen::VectorXd x = tri_solve(l, rhs);
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(2.0));

  const Eigen::VectorXd xt = tri_solve(l, rhs, true);
  CHECK((l.transpose() * xt - rhs).norm() <= 1e-10 * rhs.norm());

  Eigen::VectorXd b3(3);
  b3 << 1, 2, 3;
  CHECK_THROWS_AS(tri_solve(l, b3), DimensionMismatch);
}

TEST_CASE("vec and unvec stack columns") {
  Eigen::MatrixXd u(2, 2);
  u << 1, 3, 2, 4;  // rows (1,3) and (2,4)
  const Eigen::VectorXd v = vec(u);
  CHECK(v[0] == 1);
  CHECK(v[1] == 2);
  CHECK(v[2] == 3);
  CHECK(v[3] == 4);
  CHECK(unvec(v, 2) == u);

  RngStream s(1, 1);
  const Eigen::MatrixXd r = draw_standard_normal(s, 5, 5);
  CHECK(unvec(vec(r), 5) == r);

  CHECK_THROWS_AS(unvec(Eigen::VectorXd::Zero(5), 2), DimensionMismatch);
}

TEST_CASE("vech_index matches the closed form and is a bijection") {
  CHECK(vech_index(1, 0, 3) == 1);
  CHECK(vech_index(2, 1, 3) == 5);
  CHECK(vech_index(3, 0, 3) == 6);
  for (const int d : {1, 2, 3, 5, 9}) {
    std::vector<bool> seen(d * (d + 1) / 2, false);
    for (int i = 1; i <= d; ++i)
      for (int k = 0; k <= d - i; ++k) {
        const int idx = vech_index(i, k, d);
        REQUIRE(idx >= 1);
        REQUIRE(idx <= d * (d + 1) / 2);
        CHECK(!seen[idx - 1]);
        seen[idx - 1] = true;
      }
    for (const bool hit : seen) CHECK(hit);
  }
  CHECK_THROWS_AS(vech_index(0, 0, 3), DimensionMismatch);
  CHECK_THROWS_AS(vech_index(2, 2, 3), DimensionMismatch);
}

TEST_CASE("for_each_upper follows the vech order") {
  const int d = 4;
  for_each_upper(d, [&](int i, int j, int idx) {
    CHECK(idx == vech_index(i + 1, j - i, d) - 1);
  });
}

TEST_CASE("ols_solve: identity and diagonal designs, singular detection") {
  Eigen::VectorXd z(3);
  z << 1, 2, 3;
  CHECK(ols_solve(SymMatrix::identity(3), z).isApprox(z));

  Eigen::MatrixXd f(2, 2);
  f << 2, 0, 0, 4;
  Eigen::VectorXd z2(2);
  z2 << 2, 4;
  const Eigen::VectorXd beta = ols_solve(SymMatrix(f), z2);
  CHECK(beta[0] == doctest::Approx(1.0));
  CHECK(beta[1] == doctest::Approx(1.0));

  Eigen::VectorXd v(2);
  v << 1, 2;
  const Eigen::MatrixXd rank1 = v * v.transpose();
  CHECK_THROWS_AS(ols_solve(SymMatrix(rank1), z2), SingularDesign);
}

TEST_CASE("ols_solve is exact on well-conditioned random systems") {
  RngStream s(13, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + static_cast<int>(s.next_uniform() * 10);
    const Eigen::MatrixXd r = draw_standard_normal(s, m, m);
    const SymMatrix f(Eigen::MatrixXd(r * r.transpose() + Eigen::MatrixXd::Identity(m, m)));
    const Eigen::VectorXd w = draw_standard_normal(s, m, 1).col(0);
    const Eigen::VectorXd rhs = f.mat() * w;
    CHECK((ols_solve(f, rhs) - w).cwiseAbs().maxCoeff() < 1e-9);
  }
}
