#include <cmath>

#include "doctest.h"
#include "omnibeam/robust_bounds.hpp"
#include "omnibeam/rng.hpp"
#include "omnibeam/surface.hpp"

using namespace omnibeam;

TEST_CASE("jamming upper bound dominates every beam in the power ball") {
  Rng rng(7);
  VectorXcd h = rng.cnormal_vector(4);
  const double p = 2.0, eps = 0.2;
  const double bound = jamming_upper_bound(h, p, eps);
  CHECK(bound == doctest::Approx(p / 0.8 * h.squaredNorm()).epsilon(1e-12));

  const double budget = p / (1.0 - eps);
  for (int i = 0; i < 1000; ++i) {
    VectorXcd v = rng.cnormal_vector(4);
    v *= std::sqrt(budget * rng.uniform()) / v.norm();
    CHECK(std::norm(h.dot(v)) <= bound * (1.0 + 1e-12));
  }
  // matched filter at full power attains it
  VectorXcd mf = std::sqrt(budget) * h / h.norm();
  CHECK(std::norm(h.dot(mf)) == doctest::Approx(bound).epsilon(1e-10));

  CHECK(jamming_upper_bound(VectorXcd::Zero(3), p, eps) == 0.0);
  CHECK_THROWS_AS(jamming_upper_bound(h, p, 1.0), InvalidArgument);
  CHECK_THROWS_AS(jamming_upper_bound(h, p, -0.1), InvalidArgument);
}

TEST_CASE("lifted channel reproduces the effective-channel amplitude") {
  Rng rng(11);
  const int m = 5, nb = 3;
  const MatrixXcd cas = rng.cnormal_matrix(m, nb);
  const VectorXcd dir = rng.cnormal_vector(nb);
  const double amp = 0.63;

  VectorXd phases(m);
  for (int i = 0; i < m; ++i) phases(i) = rng.uniform(0.0, kTwoPi);
  VectorXcd g(m);
  for (int i = 0; i < m; ++i) g(i) = amp * std::exp(kImag * phases(i));
  const VectorXcd q = lift_vector(phases);

  const MatrixXcd a = lifted_channel(cas, dir, amp);
  CHECK(a.rows() == nb);
  CHECK(a.cols() == m + 1);

  // A q is the conjugate of the configured effective channel
  const VectorXcd heff = effective_channel(dir, cas, g);
  CHECK((a * q - heff.conjugate()).norm() < 1e-12 * heff.norm());

  // and the lifted beam vector reproduces the received amplitude exactly
  const VectorXcd v = rng.cnormal_vector(nb);
  const VectorXcd w = lifted_beam_vector(a, v);
  const cplx via_lift = w.dot(q);     // w^H q
  const cplx via_link = heff.dot(v);  // heff^H v
  CHECK(std::abs(via_lift - via_link) < 1e-12 * std::abs(via_link) + 1e-14);

  CHECK_THROWS_AS(lifted_channel(cas, rng.cnormal_vector(nb + 1), amp), InvalidArgument);
}

TEST_CASE("worst-case jamming covers sampled channel balls and is attained") {
  Rng rng(23);
  const int nj = 3, m = 3;
  const MatrixXcd a = rng.cnormal_matrix(nj, m + 1);
  VectorXd phases(m);
  for (int i = 0; i < m; ++i) phases(i) = rng.uniform(0.0, kTwoPi);
  const VectorXcd q = lift_vector(phases);
  const double eps = 0.35, pceil = 1.7;
  const double bound = worst_case_jamming(a, q, eps, pceil);

  for (int i = 0; i < 1000; ++i) {
    const MatrixXcd delta = rng.ball_matrix(nj, m + 1, eps);
    CHECK(pceil * ((a + delta) * q).squaredNorm() <= bound * (1.0 + 1e-12));
  }

  // the aligned rank-one perturbation on the ball boundary attains the bound
  const VectorXcd u = (a * q).normalized();
  const MatrixXcd worst = eps * u * (q.adjoint() / q.norm());
  CHECK(worst.norm() == doctest::Approx(eps).epsilon(1e-12));
  CHECK(pceil * ((a + worst) * q).squaredNorm() == doctest::Approx(bound).epsilon(1e-10));

  CHECK(worst_case_jamming(MatrixXcd::Zero(nj, m + 1), q, 0.0, pceil) == 0.0);
}

TEST_CASE("norm targets and the infeasibility certificate") {
  RobustParams rp;
  rp.p_jam_est = 0.9;
  rp.eps_power = 0.1;  // ceiling exactly 1
  rp.tau = VectorXd::Constant(2, 4.0);
  rp.eps_direct = VectorXd::Constant(2, 0.3);
  rp.eps_cascade = VectorXd::Constant(2, 0.4);  // lumped radius 0.5
  CHECK(rp.power_ceiling() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rp.lumped_radius(0) == doctest::Approx(0.5).epsilon(1e-15));

  const int m = 3;  // sqrt(m + 1) = 2
  const VectorXd th = robust_norm_targets(rp, m);
  CHECK(th(0) == doctest::Approx(2.0 - 0.5 * 2.0).epsilon(1e-12));

  RobustParams none = rp;
  none.p_jam_est = 0.0;
  CHECK_THROWS_AS(robust_norm_targets(none, m), InvalidArgument);
  CHECK(infeasible_users({MatrixXcd::Zero(2, m + 1)}, none).empty());

  // tall channel with a known smallest singular value
  MatrixXcd tall = MatrixXcd::Zero(5, 4);
  tall.topRows(4) = 0.8 * MatrixXcd::Identity(4, 4);
  // norm floor (0.8 + 0.5) * 2 = 2.6, so thresholds under 6.76 are hopeless
  rp.tau(0) = 6.5;
  rp.tau(1) = 7.0;
  std::vector<MatrixXcd> jams = {tall, tall};
  std::vector<int> bad = infeasible_users(jams, rp);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0] == 0);

  // wide channels contribute no channel floor, only the error ball
  Rng rng(3);
  const MatrixXcd wide = rng.cnormal_matrix(2, 4);
  rp.tau(0) = 0.9;  // floor 0.5 * 2 = 1 -> tau < 1 flagged
  rp.tau(1) = 1.1;
  jams = {wide, wide};
  bad = infeasible_users(jams, rp);
  REQUIRE(bad.size() == 1);
  CHECK(bad[0] == 0);
}

TEST_CASE("robust parameter validation") {
  RobustParams rp;
  rp.p_jam_est = 1.0;
  rp.eps_power = 0.5;
  rp.tau = VectorXd::Constant(1, 2.0);
  rp.eps_direct = VectorXd::Constant(1, 3.0);
  rp.eps_cascade = VectorXd::Constant(1, 4.0);
  CHECK_NOTHROW(rp.validate(1));
  CHECK(rp.power_ceiling() == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(rp.lumped_radius(0) == doctest::Approx(5.0).epsilon(1e-15));

  RobustParams bad = rp;
  bad.p_jam_est = -1.0;
  CHECK_THROWS_AS(bad.validate(1), InvalidArgument);
  bad = rp;
  bad.eps_power = 1.0;
  CHECK_THROWS_AS(bad.validate(1), InvalidArgument);
  bad = rp;
  bad.tau(0) = 0.0;
  CHECK_THROWS_AS(bad.validate(1), InvalidArgument);
  bad = rp;
  bad.eps_direct(0) = -0.1;
  CHECK_THROWS_AS(bad.validate(1), InvalidArgument);
  CHECK_THROWS_AS(rp.validate(2), InvalidArgument);

  // infinite thresholds are legal (no cap)
  RobustParams open = rp;
  open.tau(0) = std::numeric_limits<double>::infinity();
  CHECK_NOTHROW(open.validate(1));
}
