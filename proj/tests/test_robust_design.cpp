#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

#include "doctest.h"
#include "omnibeam/channel.hpp"
#include "omnibeam/hermitian.hpp"
#include "omnibeam/link_eval.hpp"
#include "omnibeam/robust_design.hpp"
#include "omnibeam/rng.hpp"

using namespace omnibeam;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct MiniSetup {
  ChannelSet cs;
  std::vector<Side> side;
  Precoder pre;
  RobustParams rp;
  Codebook cb;
};

// Small synthetic scenario with O(1) channel entries: users alternate R/T,
// estimates carry a relative error of level zeta, unit beam powers.
MiniSetup mini(int m, int nb, int nj, int k, uint64_t seed, double zeta,
               double tau = 1e6) {
  MiniSetup s;
  Rng rng(seed);
  s.cb = build_codebook(2, 1.0, kPi / 2.0, 1.0);
  for (int i = 0; i < k; ++i) {
    s.cs.bs_cascade.push_back(rng.cnormal_matrix(m, nb));
    s.cs.bs_direct.push_back(rng.cnormal_vector(nb));
    s.cs.jam_cascade.push_back(rng.cnormal_matrix(m, nj));
    s.cs.jam_direct.push_back(rng.cnormal_vector(nj));
    s.side.push_back(i % 2 == 0 ? Side::R : Side::T);
  }
  s.cs.jam_cascade_est = s.cs.jam_cascade;
  s.cs.jam_direct_est = s.cs.jam_direct;
  s.cs.radius_direct.assign(k, 0.0);
  s.cs.radius_cascade.assign(k, 0.0);
  if (zeta > 0.0) apply_csi_uncertainty(s.cs, zeta, zeta, rng);

  s.pre.directions = rng.cnormal_matrix(nb, k);
  for (int i = 0; i < k; ++i) s.pre.directions.col(i).normalize();
  s.pre.powers = VectorXd::Constant(k, 1.0);
  s.pre.v = s.pre.directions;

  s.rp.p_jam_est = 0.5;
  s.rp.eps_power = 0.2;
  s.rp.tau = VectorXd::Constant(k, tau);
  s.rp.eps_direct = VectorXd(k);
  s.rp.eps_cascade = VectorXd(k);
  for (int i = 0; i < k; ++i) {
    s.rp.eps_direct(i) = s.cs.radius_direct[i];
    s.rp.eps_cascade(i) = s.cs.radius_cascade[i];
  }
  return s;
}

// Mirrors the driver's starting point for direct subproblem tests.
SdrIterate start_at(const SdrContext& ctx, const VectorXd& phase_r) {
  const int n = ctx.n_users();
  const VectorXcd q0 = lift_vector(phase_r);
  SdrIterate it;
  it.u = VectorXd::Zero(n);
  it.t = VectorXd::Zero(n);
  it.w_prev = VectorXd::Zero(n);
  for (int k = 0; k < n; ++k) {
    it.t(k) = ctx.worst_case(k, q0) + ctx.noise_w;
    if (ctx.desired[k].norm() > 0.0) {
      const VectorXcd qs = ctx.fold_desired[k] ? ctx.fold_lift(q0) : q0;
      it.u(k) = std::max(std::norm(ctx.desired[k].dot(qs)) / it.t(k), 1e-9);
    }
    const VectorXcd qj = ctx.fold_jam[k] ? ctx.fold_lift(q0) : q0;
    it.w_prev(k) = (ctx.jam[k] * qj).squaredNorm();
  }
  return it;
}

double rate_at(const SdrContext& ctx, const VectorXcd& q) {
  double v = 0.0;
  for (int k = 0; k < ctx.n_users(); ++k) {
    const VectorXcd qs = ctx.fold_desired[k] ? ctx.fold_lift(q) : q;
    const double s = std::norm(ctx.desired[k].dot(qs));
    v += std::log2(1.0 + s / (ctx.worst_case(k, q) + ctx.noise_w));
  }
  return v;
}

double eig_min(const MatrixXcd& h) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es((h + h.adjoint()) / 2.0);
  return es.eigenvalues().minCoeff();
}

}  // namespace

TEST_CASE("context wiring routes amplitudes and folds by side") {
  MiniSetup s = mini(3, 2, 2, 2, 5, 0.1);
  const RoleAmps amps{0.9, 0.8, 0.7, 0.6};
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, 1.0, kPi / 2.0, amps, s.rp, 1.0);
  CHECK(ctx.n_users() == 2);
  CHECK(ctx.n_elements() == 3);

  // user 0 sits on the BS side: served by reflection, jammed by refraction
  CHECK(ctx.fold_desired[0] == false);
  CHECK(ctx.fold_jam[0] == true);
  CHECK(ctx.fold_desired[1] == true);
  CHECK(ctx.fold_jam[1] == false);

  const MatrixXcd a0 = lifted_channel(s.cs.bs_cascade[0], s.cs.bs_direct[0], 0.9);
  CHECK((ctx.desired[0] - lifted_beam_vector(a0, s.pre.v.col(0))).norm() < 1e-14);
  const MatrixXcd a1 = lifted_channel(s.cs.bs_cascade[1], s.cs.bs_direct[1], 0.8);
  CHECK((ctx.desired[1] - lifted_beam_vector(a1, s.pre.v.col(1))).norm() < 1e-14);

  // jamming channels come from the estimates with the cross mechanism
  const MatrixXcd j0 =
      lifted_channel(s.cs.jam_cascade_est[0], s.cs.jam_direct_est[0], 0.6);
  CHECK((ctx.jam[0] - j0).norm() == 0.0);
  const MatrixXcd j1 =
      lifted_channel(s.cs.jam_cascade_est[1], s.cs.jam_direct_est[1], 0.7);
  CHECK((ctx.jam[1] - j1).norm() == 0.0);

  CHECK((ctx.coupling - coupling_matrix(3, 1.0, kPi / 2.0)).norm() == 0.0);

  std::vector<Side> short_side = {Side::R};
  CHECK_THROWS_AS(
      make_sdr_context(s.cs, short_side, s.pre, 1.0, kPi / 2.0, amps, s.rp, 1.0),
      InvalidArgument);
  CHECK_THROWS_AS(
      make_sdr_context(s.cs, s.side, s.pre, 1.0, kPi / 2.0, amps, s.rp, 0.0),
      InvalidArgument);
}

TEST_CASE("lifted context matches the link evaluator on both sides") {
  MiniSetup s = mini(4, 3, 2, 2, 9, 0.1);
  const RoleAmps amps = codebook_amps(s.cb);
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, 1.0);

  Rng rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    VectorXd ph(4);
    for (int i = 0; i < 4; ++i) ph(i) = rng.uniform(0.0, kTwoPi);
    const PhaseConfig cfg = config_from_reflection(ph, s.cb, false);
    const SurfaceGains g = surface_gains(cfg, amps);
    const VectorXcd q = lift_vector(ph);
    const MatrixXcd x = q * q.adjoint();

    for (int k = 0; k < 2; ++k) {
      const bool is_r = s.side[k] == Side::R;
      const VectorXcd qs = ctx.fold_desired[k] ? ctx.fold_lift(q) : q;
      const VectorXcd heff = effective_channel(s.cs.bs_direct[k], s.cs.bs_cascade[k],
                                               is_r ? g.des_r : g.des_t);
      const double want = std::norm(heff.dot(s.pre.v.col(k)));
      CHECK(std::norm(ctx.desired[k].dot(qs)) == doctest::Approx(want).epsilon(1e-10));
      CHECK(herm_inner(ctx.desired_coefficient(k), x) ==
            doctest::Approx(want).epsilon(1e-10));

      const VectorXcd qj = ctx.fold_jam[k] ? ctx.fold_lift(q) : q;
      const VectorXcd jeff =
          effective_channel(s.cs.jam_direct_est[k], s.cs.jam_cascade_est[k],
                            is_r ? g.jam_r : g.jam_t);
      CHECK((ctx.jam[k] * qj).squaredNorm() ==
            doctest::Approx(jeff.squaredNorm()).epsilon(1e-10));
      CHECK(herm_inner(ctx.jam_coefficient(k), x) ==
            doctest::Approx(jeff.squaredNorm()).epsilon(1e-10));

      const double manual =
          s.rp.power_ceiling() *
          std::pow((ctx.jam[k] * qj).norm() + s.rp.lumped_radius(k) * q.norm(), 2);
      CHECK(ctx.worst_case(k, q) == doctest::Approx(manual).epsilon(1e-12));
    }
  }
}

TEST_CASE("folding commutes with arbitrary rank-one lifts") {
  MiniSetup s = mini(3, 2, 2, 2, 15, 0.0);
  const RoleAmps amps = codebook_amps(s.cb);
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, 1.0);
  Rng rng(77);
  const VectorXcd z = rng.cnormal_vector(4);  // not unit modulus on purpose
  const VectorXcd zf = ctx.fold_lift(z);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(zf(i)) == doctest::Approx(std::abs(z(i))));
  CHECK(zf(3) == z(3));
  // trace coefficient evaluated on z z^H equals the folded quadratic
  const MatrixXcd x = z * z.adjoint();
  for (int k = 0; k < 2; ++k) {
    const VectorXcd zj = ctx.fold_jam[k] ? zf : z;
    CHECK(herm_inner(ctx.jam_coefficient(k), x) ==
          doctest::Approx((ctx.jam[k] * zj).squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("subproblem layout and cone dimensions") {
  MiniSetup s = mini(1, 2, 3, 1, 13, 0.1);
  const RoleAmps amps = codebook_amps(s.cb);
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, 1.0);
  const SdrIterate prev = start_at(ctx, VectorXd::Zero(1));

  SdrLayout lay;
  const ConicProblem p = build_sca_subproblem(ctx, prev, RobustForm::kSProcedure, &lay);
  CHECK(p.blocks.size() == 6);  // lift, u, t, r, slack matrix, multiplier
  CHECK(p.blocks[lay.lift].dim == 2);
  CHECK(p.blocks[lay.u[0]].dim == 1);
  CHECK(p.blocks[lay.t[0]].dim == 1);
  CHECK(p.blocks[lay.r[0]].dim == 1);
  CHECK(p.blocks[lay.upsilon[0]].dim == 3);
  CHECK(p.blocks[lay.rho[0]].dim == 1);
  CHECK(lay.jam_scale[0] > 0.0);
  CHECK(p.pins.size() == 2);  // unit-modulus diagonal
  REQUIRE(p.lmis.size() == 2);
  int n3 = 0, nbig = 0;
  for (const auto& lmi : p.lmis) {
    if (lmi.dim == 3) ++n3;           // signal restriction
    if (lmi.dim == 3 + 2) ++nbig;     // jamming certificate, N_j + M + 1
  }
  CHECK(n3 == 1);
  CHECK(nbig == 1);
  CHECK(p.objective.terms.size() == 1);
  CHECK(p.maximize);
  // cuts (6) + jamming link + cap
  CHECK(p.inequalities.size() == 8);

  SdrLayout lay2;
  const ConicProblem p2 = build_sca_subproblem(ctx, prev, RobustForm::kNormBound, &lay2);
  CHECK(p2.blocks.size() == 4);
  CHECK(p2.lmis.size() == 1);
  CHECK(lay2.upsilon[0] == -1);
  CHECK(lay2.rho[0] == -1);
  CHECK(lay2.jam_scale[0] == 1.0);
  CHECK(p2.inequalities.size() == 8);
}

TEST_CASE("signal restriction is tangent at the previous point") {
  MiniSetup s = mini(2, 2, 2, 1, 21, 0.1);
  const RoleAmps amps = codebook_amps(s.cb);
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, 1.0);
  SdrIterate prev = start_at(ctx, VectorXd::Zero(2));
  prev.u(0) = 2.0;
  prev.t(0) = 3.0;  // noise is 1, so both auxiliaries are already unitless

  SdrLayout lay;
  const ConicProblem p = build_sca_subproblem(ctx, prev, RobustForm::kNormBound, &lay);
  REQUIRE(p.lmis.size() == 1);
  const auto& lmi = p.lmis[0];
  REQUIRE(lmi.dim == 3);
  REQUIRE(lmi.trace_terms.size() == 1);
  REQUIRE(lmi.scalar_terms.size() == 2);

  // the auxiliaries are normalized by their tangency values, so the corner
  // carries 1/(u' t') and both off-diagonal coefficients are 1/sqrt(2)
  CHECK((lmi.trace_terms[0].a - ctx.desired_coefficient(0) / 6.0).norm() < 1e-14);
  CHECK(lmi.trace_terms[0].block == lay.lift);
  CHECK(lay.u_scale[0] == 2.0);
  CHECK(lay.t_scale[0] == 3.0);
  const auto& du = lmi.scalar_terms[0].block == lay.u[0] ? lmi.scalar_terms[0]
                                                         : lmi.scalar_terms[1];
  const auto& dt = lmi.scalar_terms[0].block == lay.t[0] ? lmi.scalar_terms[0]
                                                         : lmi.scalar_terms[1];
  REQUIRE(du.block == lay.u[0]);
  REQUIRE(dt.block == lay.t[0]);
  CHECK(std::abs(du.d(0, 1) - 1.0 / std::sqrt(2.0)) < 1e-14);
  CHECK(std::abs(dt.d(0, 2) - 1.0 / std::sqrt(2.0)) < 1e-14);

  // assembling the block at the previous point (normalized coordinates 1, 1)
  // with the matching signal level lands exactly on the boundary of the cone
  MatrixXcd f = lmi.f0;
  f += 1.0 * lmi.trace_terms[0].t;  // scaled signal = u' t' / (u' t') = 1
  f += (prev.u(0) / lay.u_scale[0]) * du.d;
  f += (prev.t(0) / lay.t_scale[0]) * dt.d;
  CHECK(std::abs(eig_min(f)) < 1e-12);
}

TEST_CASE("matrix certificate dominates sampled channel errors") {
  MiniSetup s = mini(2, 2, 2, 1, 17, 0.1, 50.0);
  const RoleAmps amps = codebook_amps(s.cb);
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, 1.0);
  REQUIRE(ctx.fold_jam[0]);  // R-side user exercises the entrywise mask
  const SdrIterate prev = start_at(ctx, VectorXd::Zero(2));

  SdrLayout lay;
  ConicProblem p = build_sca_subproblem(ctx, prev, RobustForm::kSProcedure, &lay);
  SolverOptions sopt;
  sopt.gap_tol = 1e-7;
  const SolverResult res = solve_conic(p, sopt);
  REQUIRE(res.status == SolveStatus::kOptimal);

  const MatrixXcd x = res.block_values[lay.lift];
  const double gamma = lay.jam_scale[0];
  const MatrixXcd upsilon = gamma * gamma * res.block_values[lay.upsilon[0]];
  const MatrixXcd xi_s = ctx.coupling.cwiseProduct(x);
  const double lump = ctx.robust.lumped_radius(0);

  Rng rng(99);
  const double slack = 1e-6 * (1.0 + upsilon.norm());
  for (int i = 0; i < 2000; ++i) {
    const MatrixXcd delta = rng.ball_matrix(2, 3, lump);
    const MatrixXcd jt = ctx.jam[0] + delta;
    CHECK(eig_min(upsilon - jt * xi_s * jt.adjoint()) > -slack);
  }

  // the auxiliary links back to the jamming-plus-noise variable and the cap
  const double pbar = ctx.robust.power_ceiling();
  const double certified = pbar * upsilon.trace().real();
  const double t_watts = res.block_values[lay.t[0]](0, 0).real() * lay.t_scale[0];
  CHECK(certified + ctx.noise_w <= t_watts * (1.0 + 1e-6) + 1e-9);
  CHECK(certified <= ctx.robust.tau(0) * (1.0 + 1e-6));
}

TEST_CASE("growing error balls never improve the surrogate") {
  for (const RobustForm form : {RobustForm::kSProcedure, RobustForm::kNormBound}) {
    MiniSetup s = mini(2, 2, 2, 1, 29, 0.1, 40.0);
    const RoleAmps amps = codebook_amps(s.cb);
    double last = kInf;
    for (const double scale : {0.3, 1.0, 3.0}) {
      RobustParams rp = s.rp;
      rp.eps_direct *= scale;
      rp.eps_cascade *= scale;
      const SdrContext ctx = make_sdr_context(s.cs, s.side, s.pre, s.cb.slope,
                                              s.cb.intercept, amps, rp, 1.0);
      const SdrIterate prev = start_at(ctx, VectorXd::Zero(2));
      SdrLayout lay;
      ConicProblem p = build_sca_subproblem(ctx, prev, form, &lay);
      SolverOptions sopt;
      sopt.gap_tol = 1e-7;
      const SolverResult res = solve_conic(p, sopt);
      REQUIRE(res.status == SolveStatus::kOptimal);
      CHECK(res.objective <= last + 1e-6);
      last = res.objective;
    }
  }
}

TEST_CASE("single-element design matches a fine grid") {
  MiniSetup s = mini(1, 2, 2, 1, 101, 0.1);
  const RoleAmps amps = codebook_amps(s.cb);
  const SdrContext probe =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, 1.0);

  // pick a threshold three times the best the surface can certify
  const int grid_n = 3600;
  double min_wc = kInf;
  for (int i = 0; i < grid_n; ++i) {
    VectorXd ph = VectorXd::Constant(1, kTwoPi * i / grid_n);
    min_wc = std::min(min_wc, probe.worst_case(0, lift_vector(ph)));
  }
  RobustParams rp = s.rp;
  rp.tau = VectorXd::Constant(1, 3.0 * min_wc);
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, rp, 1.0);

  double best = 0.0;
  for (int i = 0; i < grid_n; ++i) {
    VectorXd ph = VectorXd::Constant(1, kTwoPi * i / grid_n);
    const VectorXcd q = lift_vector(ph);
    if (ctx.worst_case(0, q) > rp.tau(0)) continue;
    best = std::max(best, rate_at(ctx, q));
  }
  REQUIRE(best > 0.0);

  PhaseConfig init;
  init.phase_r = VectorXd::Zero(1);
  init.phase_t = VectorXd::Constant(1, s.cb.intercept);
  for (const RobustForm form : {RobustForm::kSProcedure, RobustForm::kNormBound}) {
    SdrOptions opt;
    opt.form = form;
    const SdrResult res = solve_phase_sdr(ctx, init, opt);
    CHECK(res.converged);
    CHECK(ctx.worst_case(0, res.lift) <= rp.tau(0) * 1.05);
    CHECK(rate_at(ctx, res.lift) >= 0.98 * best);
  }
}

TEST_CASE("surrogate trace is monotone and the loop settles") {
  for (const RobustForm form : {RobustForm::kSProcedure, RobustForm::kNormBound}) {
    MiniSetup s = mini(3, 3, 2, 2, 55, 0.1);
    const RoleAmps amps = codebook_amps(s.cb);
    const SdrContext ctx = make_sdr_context(s.cs, s.side, s.pre, s.cb.slope,
                                            s.cb.intercept, amps, s.rp, 1.0);
    PhaseConfig init;
    init.phase_r = VectorXd::Zero(3);
    init.phase_t = VectorXd::Constant(3, s.cb.intercept);
    SdrOptions opt;
    opt.form = form;
    const SdrResult res = solve_phase_sdr(ctx, init, opt);
    CHECK(res.converged);
    REQUIRE(!res.trace.empty());
    for (size_t i = 1; i < res.trace.size(); ++i)
      CHECK(res.trace[i].objective >= res.trace[i - 1].objective - 1e-6);

    // recovered lift is a unit-modulus profile with a pinned last entry
    REQUIRE(res.lift.size() == 4);
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(std::abs(res.lift(i)) - 1.0) < 1e-12);
    CHECK(res.lift(3) == cplx(1.0, 0.0));
    CHECK((lift_vector(res.continuous.phase_r) - res.lift).norm() < 1e-9);
    for (int i = 0; i < 3; ++i)
      CHECK(res.continuous.phase_t(i) ==
            doctest::Approx(wrap_angle(res.continuous.phase_r(i) + s.cb.intercept)));
  }
}

TEST_CASE("no admissible jammer exceeds the certified level") {
  MiniSetup s = mini(2, 2, 2, 2, 131, 0.15, kInf);
  const RoleAmps amps = codebook_amps(s.cb);
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, 1.0);
  PhaseConfig init;
  init.phase_r = VectorXd::Zero(2);
  init.phase_t = VectorXd::Constant(2, s.cb.intercept);
  SdrOptions opt;
  const SdrResult res = solve_phase_sdr(ctx, init, opt);

  const SurfaceGains g = surface_gains(res.continuous, amps);
  Rng rng(7177);
  const double pceil = s.rp.power_ceiling();
  for (int rep = 0; rep < 200; ++rep) {
    ChannelSet truth = s.cs;
    for (int k = 0; k < 2; ++k) {
      truth.jam_direct[k] =
          s.cs.jam_direct_est[k] + rng.ball_vector(2, s.rp.eps_direct(k));
      truth.jam_cascade[k] =
          s.cs.jam_cascade_est[k] + rng.ball_matrix(2, 2, s.rp.eps_cascade(k));
    }
    VectorXcd vj = rng.cnormal_vector(2);
    vj *= std::sqrt(pceil * rng.uniform()) / vj.norm();
    for (int k = 0; k < 2; ++k) {
      const double realized = received_jamming_power(truth, s.side, g, vj, k);
      CHECK(realized <= ctx.worst_case(k, res.lift) * (1.0 + 1e-9) + 1e-15);
    }
  }
}

TEST_CASE("rank-one randomization recovers exact factors and improves with trials") {
  Rng rng(41);
  VectorXd ph(4);
  for (int i = 0; i < 4; ++i) ph(i) = rng.uniform(0.0, kTwoPi);
  const VectorXcd qstar = lift_vector(ph);
  const MatrixXcd xi = qstar * qstar.adjoint();

  auto any_obj = [](const VectorXcd&) { return 0.0; };
  auto always = [](const VectorXcd&) { return true; };
  const VectorXcd got = randomize_rank_one(xi, 3, any_obj, always, 9);
  CHECK((got - qstar).norm() < 5e-7);

  // mixed-rank input: more draws can only improve the best score
  VectorXd ph2(4);
  for (int i = 0; i < 4; ++i) ph2(i) = rng.uniform(0.0, kTwoPi);
  const VectorXcd q2 = lift_vector(ph2);
  const MatrixXcd mix = 0.6 * xi + 0.4 * q2 * q2.adjoint() +
                        0.2 * MatrixXcd::Identity(5, 5);
  const VectorXcd b = rng.cnormal_vector(5);
  auto score = [&](const VectorXcd& q) { return std::norm(b.dot(q)); };
  const VectorXcd few = randomize_rank_one(mix, 5, score, always, 17);
  const VectorXcd many = randomize_rank_one(mix, 60, score, always, 17);
  CHECK(score(many) >= score(few) - 1e-12);

  // deterministic per seed
  const VectorXcd again = randomize_rank_one(mix, 60, score, always, 17);
  CHECK((again - many).norm() == 0.0);

  auto never = [](const VectorXcd&) { return false; };
  CHECK_THROWS_AS(randomize_rank_one(mix, 4, score, never, 1), NoFeasibleCandidate);
  CHECK_THROWS_AS(randomize_rank_one(mix, 0, score, always, 1), InvalidArgument);
}

TEST_CASE("provably unattainable caps raise the violating user set") {
  // tall lifted jamming channel: N_j = 4 rows against M + 1 = 3 columns
  MiniSetup s = mini(2, 2, 4, 2, 211, 0.1);
  const RoleAmps amps = codebook_amps(s.cb);
  SdrContext probe =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, 1.0);
  Eigen::JacobiSVD<MatrixXcd> svd(probe.jam[0]);
  const double smin = svd.singularValues().minCoeff();
  REQUIRE(smin > 0.0);

  RobustParams rp = s.rp;
  const double floor0 = rp.power_ceiling() *
                        std::pow((smin + rp.lumped_radius(0)) * std::sqrt(3.0), 2);
  rp.tau(0) = 0.5 * floor0;
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, rp, 1.0);
  PhaseConfig init;
  init.phase_r = VectorXd::Zero(2);
  init.phase_t = VectorXd::Constant(2, s.cb.intercept);
  try {
    solve_phase_sdr(ctx, init, SdrOptions{});
    FAIL("expected an infeasibility certificate");
  } catch (const InfeasibleProblem& e) {
    REQUIRE(e.violating_users.size() == 1);
    CHECK(e.violating_users[0] == 0);
  }

  // the norm form flags a hopeless threshold even for wide channels
  MiniSetup w = mini(2, 2, 2, 1, 223, 0.1);
  RobustParams rpw = w.rp;
  rpw.tau(0) = 0.5 * rpw.power_ceiling() * rpw.lumped_radius(0) * rpw.lumped_radius(0) * 3.0;
  const SdrContext wctx =
      make_sdr_context(w.cs, w.side, w.pre, w.cb.slope, w.cb.intercept, amps, rpw, 1.0);
  const SdrIterate prev = start_at(wctx, VectorXd::Zero(2));
  try {
    build_sca_subproblem(wctx, prev, RobustForm::kNormBound, nullptr);
    FAIL("expected an infeasibility certificate");
  } catch (const InfeasibleProblem& e) {
    REQUIRE(e.violating_users.size() == 1);
    CHECK(e.violating_users[0] == 0);
  }
}

TEST_CASE("unpowered beams ride along without breaking the design") {
  for (const RobustForm form : {RobustForm::kSProcedure, RobustForm::kNormBound}) {
    MiniSetup s = mini(2, 3, 2, 2, 307, 0.1);
    s.pre.v.col(1).setZero();
    s.pre.powers(1) = 0.0;
    const RoleAmps amps = codebook_amps(s.cb);
    const SdrContext ctx = make_sdr_context(s.cs, s.side, s.pre, s.cb.slope,
                                            s.cb.intercept, amps, s.rp, 1.0);
    CHECK(ctx.desired[1].norm() == 0.0);
    PhaseConfig init;
    init.phase_r = VectorXd::Zero(2);
    init.phase_t = VectorXd::Constant(2, s.cb.intercept);
    SdrOptions opt;
    opt.form = form;
    const SdrResult res = solve_phase_sdr(ctx, init, opt);
    CHECK(res.converged);
    for (size_t i = 1; i < res.trace.size(); ++i)
      CHECK(res.trace[i].objective >= res.trace[i - 1].objective - 1e-6);
    // the idle user contributes nothing and the active one still earns rate
    const VectorXcd qs1 = ctx.fold_desired[1] ? ctx.fold_lift(res.lift) : res.lift;
    CHECK(std::norm(ctx.desired[1].dot(qs1)) == 0.0);
    CHECK(rate_at(ctx, res.lift) > 0.0);
  }
}

TEST_CASE("jamming minimization steers the lift toward the null") {
  // single jamming antenna, exact estimates: the best profile anti-aligns the
  // cascade entries against the dominant direct term
  ChannelSet cs;
  cs.bs_cascade.push_back(MatrixXcd::Zero(2, 1));
  cs.bs_direct.push_back(VectorXcd::Ones(1));
  MatrixXcd jc(2, 1);
  jc << cplx(0.0, 1.0), cplx(0.7, 0.0);
  cs.jam_cascade.push_back(jc);
  VectorXcd jd(1);
  jd << cplx(-3.0, 0.0);
  cs.jam_direct.push_back(jd);
  cs.jam_cascade_est = cs.jam_cascade;
  cs.jam_direct_est = cs.jam_direct;
  cs.radius_direct.assign(1, 0.0);
  cs.radius_cascade.assign(1, 0.0);
  std::vector<Side> side = {Side::R};
  Precoder pre;
  pre.directions = MatrixXcd::Ones(1, 1);
  pre.powers = VectorXd::Ones(1);
  pre.v = pre.directions;
  RobustParams rp;
  rp.p_jam_est = 2.0;
  rp.eps_power = 0.0;
  rp.tau = VectorXd::Constant(1, kInf);
  rp.eps_direct = VectorXd::Zero(1);
  rp.eps_cascade = VectorXd::Zero(1);

  const RoleAmps amps{1.0, 1.0, 1.0, 1.0};
  const SdrContext ctx = make_sdr_context(cs, side, pre, 1.0, kPi / 2.0, amps, rp, 1.0);
  const SdrResult res = solve_jam_min_sdr(ctx, SdrOptions{});
  CHECK(res.converged);
  const double target = 2.0 * std::pow(3.0 - 1.0 - 0.7, 2);
  const double got = ctx.worst_case(0, res.lift);
  CHECK(got >= target * (1.0 - 1e-9));
  CHECK(got <= target * 1.02);

  // with no coupling at all the solver hands back the neutral profile
  ChannelSet flat = cs;
  flat.jam_cascade_est[0].setZero();
  flat.jam_direct_est[0].setZero();
  const RoleAmps none{0.0, 0.0, 0.0, 0.0};
  const SdrContext zero = make_sdr_context(flat, side, pre, 1.0, kPi / 2.0, none, rp, 1.0);
  const SdrResult base = solve_jam_min_sdr(zero, SdrOptions{});
  CHECK(base.converged);
  CHECK((base.lift - VectorXcd::Ones(3)).norm() == 0.0);
  CHECK(base.continuous.phase_r.norm() == 0.0);
}

TEST_CASE("realistic power scales solve cleanly") {
  MiniSetup s = mini(2, 2, 2, 2, 777, 0.1);
  const double ch = 1e-5;
  for (int k = 0; k < 2; ++k) {
    s.cs.bs_cascade[k] *= ch;
    s.cs.bs_direct[k] *= ch;
    s.cs.jam_cascade[k] *= ch;
    s.cs.jam_direct[k] *= ch;
    s.cs.jam_cascade_est[k] *= ch;
    s.cs.jam_direct_est[k] *= ch;
    s.rp.eps_direct(k) *= ch;
    s.rp.eps_cascade(k) *= ch;
  }
  s.pre.v *= std::sqrt(5.0);  // 10 W split over two beams
  s.rp.p_jam_est = 10.0;
  s.rp.eps_power = 0.1;
  const double noise = 2.5e-13;

  const RoleAmps amps = codebook_amps(s.cb);
  SdrContext probe =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, s.rp, noise);
  const VectorXcd q0 = lift_vector(VectorXd::Zero(2));
  RobustParams rp = s.rp;
  for (int k = 0; k < 2; ++k) rp.tau(k) = 1.5 * probe.worst_case(k, q0);
  const SdrContext ctx =
      make_sdr_context(s.cs, s.side, s.pre, s.cb.slope, s.cb.intercept, amps, rp, noise);

  PhaseConfig init;
  init.phase_r = VectorXd::Zero(2);
  init.phase_t = VectorXd::Constant(2, s.cb.intercept);
  const SdrResult res = solve_phase_sdr(ctx, init, SdrOptions{});
  CHECK(res.converged);
  for (size_t i = 1; i < res.trace.size(); ++i)
    CHECK(res.trace[i].objective >= res.trace[i - 1].objective - 1e-6);
  CHECK(rate_at(ctx, res.lift) > 0.0);
  for (int k = 0; k < 2; ++k)
    CHECK(ctx.worst_case(k, res.lift) <= rp.tau(k) * 1.05);
}

TEST_CASE("codebook commit explores the bracketing entries") {
  const Codebook cb = build_codebook(2, 1.0, kPi / 2.0, 1.0);
  auto no_margin = [](const PhaseConfig&) { return VectorXd(); };

  PhaseConfig cont;
  cont.phase_r = VectorXd::Constant(1, 0.3);
  cont.phase_t = VectorXd::Constant(1, 0.3 + kPi / 2.0);

  // rate peaks near 0.45: entry 0 wins over entry pi/2
  auto rate1 = [](const PhaseConfig& c) { return std::cos(c.phase_r(0) - 0.45); };
  DiscretizeResult r1 = discretize_local_search(cont, cb, rate1, no_margin, 1);
  CHECK(r1.config.discrete);
  CHECK(r1.config.phase_r(0) == cb.phase_r(0));
  CHECK(r1.config.phase_t(0) == cb.phase_t(0));
  CHECK(!r1.violation);

  // a margin that rules out entry 0 forces the runner-up
  auto veto0 = [&](const PhaseConfig& c) {
    return VectorXd::Constant(1, c.phase_r(0) == cb.phase_r(0) ? 1.0 : -1.0).eval();
  };
  DiscretizeResult r2 = discretize_local_search(cont, cb, rate1, veto0, 1);
  CHECK(r2.config.phase_r(0) == cb.phase_r(1));
  CHECK(!r2.violation);

  // both candidates infeasible: pick the smaller violation and flag it
  auto bad = [&](const PhaseConfig& c) {
    return VectorXd::Constant(1, c.phase_r(0) == cb.phase_r(0) ? 2.0 : 0.5).eval();
  };
  DiscretizeResult r3 = discretize_local_search(cont, cb, rate1, bad, 1);
  CHECK(r3.config.phase_r(0) == cb.phase_r(1));
  CHECK(r3.violation);

  // an exact codebook phase stays put
  PhaseConfig exact;
  exact.phase_r = VectorXd::Constant(1, cb.phase_r(2));
  exact.phase_t = VectorXd::Constant(1, cb.phase_t(2));
  DiscretizeResult r4 = discretize_local_search(exact, cb, rate1, no_margin, 2);
  CHECK(r4.config.phase_r(0) == cb.phase_r(2));

  // wrapping bracket: a phase above the last entry may commit to entry 0
  PhaseConfig wrap;
  wrap.phase_r = VectorXd::Constant(1, 6.2);
  wrap.phase_t = VectorXd::Constant(1, wrap_angle(6.2 + kPi / 2.0));
  auto rate_wrap = [](const PhaseConfig& c) { return std::cos(c.phase_r(0)); };
  DiscretizeResult r5 = discretize_local_search(wrap, cb, rate_wrap, no_margin, 1);
  CHECK(r5.config.phase_r(0) == cb.phase_r(0));

  CHECK_THROWS_AS(discretize_local_search(cont, cb, rate1, no_margin, 0), InvalidArgument);
}

TEST_CASE("separable objectives make the commit match brute force") {
  const Codebook cb = build_codebook(2, 1.0, kPi / 2.0, 1.0);
  Rng rng(17);
  auto no_margin = [](const PhaseConfig&) { return VectorXd(); };
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 3;
    PhaseConfig cont;
    cont.phase_r = VectorXd(m);
    cont.phase_t = VectorXd(m);
    VectorXd target(m);
    for (int i = 0; i < m; ++i) {
      cont.phase_r(i) = rng.uniform(0.0, kTwoPi);
      cont.phase_t(i) = wrap_angle(cont.phase_r(i) + kPi / 2.0);
      target(i) = rng.uniform(0.0, kTwoPi);
    }
    auto rate = [&](const PhaseConfig& c) {
      double v = 0.0;
      for (int i = 0; i < m; ++i) v += std::cos(c.phase_r(i) - target(i));
      return v;
    };
    const DiscretizeResult got = discretize_local_search(cont, cb, rate, no_margin, 1);

    // brute force over the eight bracket combinations
    double best = -kInf;
    std::pair<int, int> br[3];
    for (int i = 0; i < m; ++i) br[i] = bracket_entries(cb, cont.phase_r(i));
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          PhaseConfig cand = cont;
          const int pick[3] = {a == 0 ? br[0].first : br[0].second,
                               b == 0 ? br[1].first : br[1].second,
                               c == 0 ? br[2].first : br[2].second};
          for (int i = 0; i < m; ++i) {
            cand.phase_r(i) = cb.phase_r(pick[i]);
            cand.phase_t(i) = cb.phase_t(pick[i]);
          }
          best = std::max(best, rate(cand));
        }
    CHECK(rate(got.config) == doctest::Approx(best).epsilon(1e-12));
  }
}
