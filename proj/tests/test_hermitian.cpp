#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "omnibeam/hermitian.hpp"
#include "omnibeam/rng.hpp"

using namespace omnibeam;

TEST_CASE("constructor accepts hermitian input and exactifies it") {
  MatrixXcd m(2, 2);
  m << cplx(1.0, 0.0), cplx(0.5, -0.25), cplx(0.5, 0.25), cplx(2.0, 0.0);
  // tiny asymmetry below tolerance
  m(0, 1) += cplx(1e-14, 1e-14);
  HermitianMatrix h(m);
  CHECK(h(0, 1) == std::conj(h(1, 0)));
  CHECK(h(0, 0).imag() == 0.0);
  CHECK(h(1, 1).imag() == 0.0);
}

TEST_CASE("constructor rejects non-hermitian input") {
  MatrixXcd m(2, 2);
  m << cplx(1.0, 0.0), cplx(0.5, 0.0), cplx(0.7, 0.0), cplx(2.0, 0.0);
  CHECK_THROWS_AS(HermitianMatrix{m}, InvalidArgument);
  MatrixXcd rect(2, 3);
  rect.setZero();
  CHECK_THROWS_AS(HermitianMatrix{rect}, InvalidArgument);
}

TEST_CASE("tolerance scales with magnitude") {
  // large-magnitude matrices keep proportional slack
  MatrixXcd m(2, 2);
  m << cplx(1e12, 0.0), cplx(5e11, 1e11), cplx(5e11, -1e11), cplx(2e12, 0.0);
  m(0, 1) += cplx(1e-3, 0.0);  // absolute 1e-3 but relative 1e-15
  CHECK_NOTHROW(HermitianMatrix{m});
}

TEST_CASE("real embedding structure and eigenvalue doubling") {
  Rng r(3);
  const int n = 5;
  MatrixXcd a = r.cnormal_matrix(n, n);
  MatrixXcd h = a * a.adjoint();  // hermitian psd
  const MatrixXd t = hermitian_to_real_embedding(h);
  REQUIRE(t.rows() == 2 * n);
  // block layout
  CHECK((t.topLeftCorner(n, n) - h.real()).norm() < 1e-14 * h.norm());
  CHECK((t.topRightCorner(n, n) + h.imag()).norm() < 1e-14 * h.norm());
  CHECK((t.bottomLeftCorner(n, n) - h.imag()).norm() < 1e-14 * h.norm());
  CHECK((t - t.transpose()).norm() < 1e-12 * t.norm());

  Eigen::SelfAdjointEigenSolver<MatrixXcd> eh(h);
  Eigen::SelfAdjointEigenSolver<MatrixXd> et(t);
  // every eigenvalue of h appears twice in t
  for (int i = 0; i < n; ++i) {
    const double lam = eh.eigenvalues()(i);
    CHECK(et.eigenvalues()(2 * i) == doctest::Approx(lam).epsilon(1e-10));
    CHECK(et.eigenvalues()(2 * i + 1) == doctest::Approx(lam).epsilon(1e-10));
  }
}

TEST_CASE("embedding is linear and preserves psd") {
  Rng r(5);
  MatrixXcd a = r.cnormal_matrix(4, 4);
  MatrixXcd b = r.cnormal_matrix(4, 4);
  MatrixXcd ha = a + a.adjoint();
  MatrixXcd hb = b + b.adjoint();
  const MatrixXd lhs = hermitian_to_real_embedding(2.0 * ha - 3.0 * hb);
  const MatrixXd rhs =
      2.0 * hermitian_to_real_embedding(ha) - 3.0 * hermitian_to_real_embedding(hb);
  CHECK((lhs - rhs).norm() < 1e-12 * (1.0 + rhs.norm()));
}

TEST_CASE("principal_rank_one recovers a planted rank-one matrix") {
  Rng r(8);
  VectorXcd v = r.cnormal_vector(6);
  v.normalize();
  const double lam = 3.7;
  MatrixXcd x = lam * v * v.adjoint();
  const RankOneResult res = principal_rank_one(x);
  CHECK(res.lambda1 == doctest::Approx(lam).epsilon(1e-10));
  CHECK(res.ratio > 1e10);
  // eigenvector equal up to global phase
  const cplx phase = res.v1.dot(v) / std::abs(res.v1.dot(v));
  CHECK((v - phase * res.v1).norm() < 1e-8);
}

TEST_CASE("principal_rank_one ratio reflects mixing") {
  Rng r(12);
  VectorXcd v1 = r.cnormal_vector(5).normalized();
  VectorXcd v2 = r.cnormal_vector(5).normalized();
  v2 = (v2 - v1.dot(v2) * v1).normalized();  // orthogonalize
  MatrixXcd x = 2.0 * v1 * v1.adjoint() + 1.0 * v2 * v2.adjoint();
  const RankOneResult res = principal_rank_one(x);
  CHECK(res.lambda1 == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(res.lambda2 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(res.ratio == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("herm_inner matches real trace inner product") {
  Rng r(15);
  MatrixXcd a = r.cnormal_matrix(4, 4);
  MatrixXcd b = r.cnormal_matrix(4, 4);
  MatrixXcd ha = a + a.adjoint();
  MatrixXcd hb = b + b.adjoint();
  const double direct = (ha * hb).trace().real();
  CHECK(herm_inner(ha, hb) == doctest::Approx(direct).epsilon(1e-12));
}
