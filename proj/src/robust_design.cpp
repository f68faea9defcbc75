#include "omnibeam/robust_design.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <utility>

#include "omnibeam/hermitian.hpp"

namespace omnibeam {
namespace {

constexpr double kLn2 = 0.6931471805599453;

// Entrywise reflection -> refraction lift multipliers: e^{-j intercept} on the
// element entries, 1 on the pinned last entry. These are exactly the last
// column of the coupling matrix.
VectorXcd fold_factors(const MatrixXcd& coupling) {
  return coupling.col(coupling.cols() - 1);
}

MatrixXcd unit_pair(int dim, int i, int j) {
  MatrixXcd e = MatrixXcd::Zero(dim, dim);
  e(i, j) = 1.0;
  e(j, i) = 1.0;
  return e;
}

// Entrywise phase projection; ties the global phase so the last entry is 1.
VectorXcd project_unit(const VectorXcd& z) {
  const int n = static_cast<int>(z.size());
  VectorXcd out(n);
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(z(i));
    out(i) = a > 0.0 ? z(i) / a : cplx(1.0, 0.0);
  }
  out *= std::conj(out(n - 1));
  out(n - 1) = 1.0;
  return out;
}

// Tangent of log2(1 + u) at u = c, as an upper bound on r. c is the physical
// SINR; the block variable is u / u_scale.
void add_log_cut(ConicProblem& p, const SdrLayout& lay, int k, double c) {
  const double slope = 1.0 / ((1.0 + c) * kLn2);
  LinExpr lhs;
  lhs.add_scalar(lay.r[k], 1.0).add_scalar(lay.u[k], -slope * lay.u_scale[k]);
  p.inequalities.push_back(
      {std::move(lhs), std::log2(1.0 + c) - c * slope, "cut" + std::to_string(k)});
}

// Re-solves with tangent refinement until r_k tracks log2(1 + u_k) for every
// active user. Throws per the outer-iteration policy on solver failure.
SolverResult solve_refined(ConicProblem& p, const SdrLayout& lay,
                           const std::vector<bool>& active, const SdrOptions& opt,
                           const SolverOptions& sopt, int outer_iter) {
  SolverResult res;
  for (int round = 0;; ++round) {
    res = solve_conic(p, sopt);
    if (res.status == SolveStatus::kInfeasible) {
      if (outer_iter == 1)
        throw InfeasibleProblem("initial convex subproblem infeasible");
      throw OmnibeamError("convex subproblem infeasible at iteration " +
                          std::to_string(outer_iter));
    }
    if (res.status == SolveStatus::kMaxIterations && !(res.gap < 1e-4))
      throw OmnibeamError("convex subproblem failed to converge");
    if (round >= opt.cut_rounds) break;
    bool added = false;
    for (int k = 0; k < static_cast<int>(lay.u.size()); ++k) {
      if (!active[k]) continue;
      const double uk =
          std::max(res.block_values[lay.u[k]](0, 0).real(), 0.0) * lay.u_scale[k];
      const double rk = res.block_values[lay.r[k]](0, 0).real();
      if (rk - std::log2(1.0 + uk) > opt.cut_tol * (1.0 + std::abs(res.objective))) {
        add_log_cut(p, lay, k, uk);
        added = true;
      }
    }
    if (!added) break;
  }
  return res;
}

PhaseConfig phases_from_lift(const VectorXcd& q, double slope, double intercept) {
  const int m = static_cast<int>(q.size()) - 1;
  PhaseConfig cfg;
  cfg.phase_r = VectorXd(m);
  cfg.phase_t = VectorXd(m);
  cfg.discrete = false;
  for (int i = 0; i < m; ++i) {
    const double pr = wrap_angle(-std::arg(q(i)));
    cfg.phase_r(i) = pr;
    cfg.phase_t(i) = wrap_angle(slope * pr + intercept);
  }
  return cfg;
}

}  // namespace

MatrixXcd SdrContext::desired_coefficient(int k) const {
  VectorXcd w = desired[k];
  if (fold_desired[k]) w = w.cwiseProduct(fold_factors(coupling).conjugate());
  return w * w.adjoint();
}

MatrixXcd SdrContext::jam_coefficient(int k) const {
  MatrixXcd g = jam[k].adjoint() * jam[k];
  if (fold_jam[k]) g = g.cwiseProduct(coupling.transpose());
  return g;
}

VectorXcd SdrContext::fold_lift(const VectorXcd& lift) const {
  return lift.cwiseProduct(fold_factors(coupling));
}

double SdrContext::worst_case(int k, const VectorXcd& lift) const {
  const VectorXcd qs = fold_jam[k] ? fold_lift(lift) : lift;
  return worst_case_jamming(jam[k], qs, robust.lumped_radius(k), robust.power_ceiling());
}

SdrContext make_sdr_context(const ChannelSet& cs, const std::vector<Side>& side,
                            const Precoder& pre, double slope, double intercept,
                            const RoleAmps& amps, const RobustParams& rp, double noise_w) {
  const int n = cs.n_users();
  if (n == 0) throw InvalidArgument("make_sdr_context: empty channel set");
  if (static_cast<int>(side.size()) != n)
    throw InvalidArgument("make_sdr_context: side count mismatch");
  if (pre.v.cols() != n) throw InvalidArgument("make_sdr_context: precoder user mismatch");
  if (!(noise_w > 0.0)) throw InvalidArgument("make_sdr_context: noise must be positive");
  rp.validate(n);
  const int m = static_cast<int>(cs.bs_cascade[0].rows());

  SdrContext ctx;
  ctx.coupling = coupling_matrix(m, slope, intercept);
  ctx.slope = slope;
  ctx.intercept = intercept;
  ctx.robust = rp;
  ctx.noise_w = noise_w;
  ctx.desired.resize(n);
  ctx.fold_desired.assign(n, false);
  ctx.jam.resize(n);
  ctx.fold_jam.assign(n, false);
  for (int k = 0; k < n; ++k) {
    if (cs.bs_cascade[k].rows() != m || cs.jam_cascade_est[k].rows() != m)
      throw InvalidArgument("make_sdr_context: element count varies across users");
    const bool is_r = side[k] == Side::R;
    // The BS illuminates the surface from the R side and the jammer from the
    // T side, so the two roles use opposite mechanisms for the same user.
    const double amp_des = is_r ? amps.des_refl : amps.des_refr;
    const double amp_jam = is_r ? amps.jam_refr : amps.jam_refl;
    ctx.fold_desired[k] = !is_r;
    ctx.fold_jam[k] = is_r;
    const MatrixXcd a_des = lifted_channel(cs.bs_cascade[k], cs.bs_direct[k], amp_des);
    ctx.desired[k] = lifted_beam_vector(a_des, pre.v.col(k));
    ctx.jam[k] = lifted_channel(cs.jam_cascade_est[k], cs.jam_direct_est[k], amp_jam);
  }
  return ctx;
}

ConicProblem build_sca_subproblem(const SdrContext& ctx, const SdrIterate& prev,
                                  RobustForm form, SdrLayout* layout) {
  const int n = ctx.n_users();
  if (n == 0) throw InvalidArgument("subproblem: context has no users");
  const int m = ctx.n_elements();
  if (m < 1) throw InvalidArgument("subproblem: context has no surface elements");
  const int d = m + 1;
  if (!(ctx.noise_w > 0.0)) throw InvalidArgument("subproblem: noise must be positive");
  ctx.robust.validate(n);
  if (prev.u.size() != n || prev.t.size() != n)
    throw InvalidArgument("subproblem: iterate size mismatch");

  ConicProblem p;
  p.maximize = true;
  SdrLayout lay;
  lay.u.assign(n, -1);
  lay.t.assign(n, -1);
  lay.r.assign(n, -1);
  lay.upsilon.assign(n, -1);
  lay.rho.assign(n, -1);
  lay.jam_scale.assign(n, 1.0);
  lay.u_scale.assign(n, 1.0);
  lay.t_scale.assign(n, 1.0);

  lay.lift = p.add_block("lift", d);
  for (int i = 0; i < d; ++i) p.pin(lay.lift, i, i, 1.0);

  const double pbar = ctx.robust.power_ceiling();
  const double sigma2 = ctx.noise_w;

  for (int k = 0; k < n; ++k) {
    const std::string id = std::to_string(k);
    if (ctx.desired[k].size() != d)
      throw InvalidArgument("subproblem: desired coefficient size mismatch");
    if (ctx.jam[k].cols() != d)
      throw InvalidArgument("subproblem: lifted jamming channel size mismatch");
    if (!(prev.t(k) > 0.0))
      throw InvalidArgument("subproblem: previous jamming-plus-noise must be positive");

    lay.u[k] = p.add_block("u" + id, 1);
    lay.t[k] = p.add_block("t" + id, 1);
    lay.r[k] = p.add_block("r" + id, 1);
    p.objective.add_scalar(lay.r[k], 1.0);
    const double tbar_w = prev.t(k);
    lay.t_scale[k] = tbar_w;

    // Signal side: u_k t_k <= |w_k^H q|^2 convexified about the previous
    // point via u t <= (t'/2u') u^2 + (u'/2t') t^2, expressed as a 3x3 Schur
    // block. Both auxiliaries are measured in units of their tangency values
    // (u = ubar * u-block, t = tbar * t-block), which keeps every block value
    // and every emitted coefficient near 1 no matter how the physical scales
    // of signal, jamming, and noise are spread out.
    const bool active = ctx.desired[k].norm() > 0.0;
    if (active) {
      if (!(prev.u(k) > 0.0))
        throw InvalidArgument("subproblem: previous sinr must be positive when active");
      const double ubar = prev.u(k);
      lay.u_scale[k] = ubar;
      const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
      ConicProblem::Lmi lmi;
      lmi.dim = 3;
      lmi.name = "signal" + id;
      MatrixXcd f0 = MatrixXcd::Zero(3, 3);
      f0(1, 1) = 1.0;
      f0(2, 2) = 1.0;
      lmi.f0 = std::move(f0);
      MatrixXcd e00 = MatrixXcd::Zero(3, 3);
      e00(0, 0) = 1.0;
      lmi.trace_terms.push_back(
          {lay.lift, ctx.desired_coefficient(k) / (ubar * tbar_w), std::move(e00)});
      lmi.scalar_terms.push_back({lay.u[k], inv_sqrt2 * unit_pair(3, 0, 1)});
      lmi.scalar_terms.push_back({lay.t[k], inv_sqrt2 * unit_pair(3, 0, 2)});
      p.lmis.push_back(std::move(lmi));
    } else {
      // Unpowered beam: the quotient constraint degenerates, so pin the SINR
      // auxiliary at zero and leave the jamming machinery in force.
      LinExpr lhs;
      lhs.add_scalar(lay.u[k], 1.0);
      p.inequalities.push_back({std::move(lhs), 0.0, "inactive" + id});
    }

    add_log_cut(p, lay, k, 0.0);
    if (active) {
      for (double f : {0.25, 0.5, 1.0, 2.0, 4.0}) add_log_cut(p, lay, k, f * prev.u(k));
    }

    // Jamming side: t_k >= worst-case jamming + noise, plus the hard cap tau.
    const double lump = ctx.robust.lumped_radius(k);
    const double tau = ctx.robust.tau(k);
    if (!active) {
      // No product constraint consumes t for an unpowered beam, so nothing
      // bounds it from above and the feasible set recesses along a ray the
      // interior-point method cannot center against. Pin it at the tangency
      // value; only the hard cap stays in force below.
      LinExpr pin;
      pin.add_scalar(lay.t[k], 1.0);
      p.equalities.push_back({std::move(pin), 1.0, "t_pin" + id});
    }
    if (pbar <= 0.0) {
      if (active) {
        LinExpr lhs;
        lhs.add_scalar(lay.t[k], -1.0);
        p.inequalities.push_back({std::move(lhs), -sigma2 / tbar_w, "noise_floor" + id});
      }
    } else if (form == RobustForm::kSProcedure && lump > 0.0 &&
               (active || std::isfinite(tau))) {
      // Matrix-uncertainty certificate: for every ||Delta||_F <= lump,
      //   (J + Delta) Xi_s (J + Delta)^H <= Upsilon,
      // enforced by one LMI with a multiplier rho. The block is congruence
      // scaled by gamma so the emitted data is O(1); Upsilon and rho are the
      // scaled variables (watts = pbar * gamma^2 * trace).
      const int nj = static_cast<int>(ctx.jam[k].rows());
      const double gamma =
          std::max(std::hypot(ctx.jam[k].norm(), lump), 1e-150) / std::sqrt(double(d));
      lay.jam_scale[k] = gamma;
      lay.upsilon[k] = p.add_block("ups" + id, nj);
      lay.rho[k] = p.add_block("rho" + id, 1);

      ConicProblem::Lmi lmi;
      lmi.dim = nj + d;
      lmi.name = "jam_lmi" + id;
      MatrixXcd g1(nj + d, d);
      g1.topRows(nj) = ctx.jam[k] / gamma;
      g1.bottomRows(d) = MatrixXcd::Identity(d, d);
      ConicProblem::Lmi::Sandwich s1;
      s1.block = lay.lift;
      s1.g = std::move(g1);
      if (ctx.fold_jam[k]) s1.mask = ctx.coupling;
      s1.sign = -1.0;
      lmi.sandwiches.push_back(std::move(s1));
      MatrixXcd g2 = MatrixXcd::Zero(nj + d, nj);
      g2.topRows(nj) = MatrixXcd::Identity(nj, nj);
      lmi.sandwiches.push_back({lay.upsilon[k], std::move(g2), MatrixXcd(), 1.0});
      MatrixXcd dmat = MatrixXcd::Zero(nj + d, nj + d);
      dmat.topLeftCorner(nj, nj) = -MatrixXcd::Identity(nj, nj);
      dmat.bottomRightCorner(d, d) =
          (gamma * gamma / (lump * lump)) * MatrixXcd::Identity(d, d);
      lmi.scalar_terms.push_back({lay.rho[k], std::move(dmat)});
      p.lmis.push_back(std::move(lmi));

      LinExpr link;
      link.add(lay.upsilon[k], (pbar * gamma * gamma / tbar_w) * MatrixXcd::Identity(nj, nj))
          .add_scalar(lay.t[k], -1.0);
      p.inequalities.push_back({std::move(link), -sigma2 / tbar_w, "jam_link" + id});
      if (std::isfinite(tau)) {
        LinExpr cap;
        cap.add(lay.upsilon[k], MatrixXcd::Identity(nj, nj));
        p.inequalities.push_back({std::move(cap), tau / (pbar * gamma * gamma), "jam_cap" + id});
      }
    } else {
      // Norm-ball form: J_wc = pbar (sqrt(w) + lump sqrt(d))^2 with
      // w = tr(R_jam X). The bound is concave in w, so its tangent at the
      // previous w overestimates it and keeps the constraint convex. With a
      // zero radius this is exact and needs no previous point.
      const MatrixXcd rj = ctx.jam_coefficient(k);
      const double c = lump * std::sqrt(double(d));
      double grow = 1.0, shift = 0.0;
      if (c > 0.0) {
        if (prev.w_prev.size() != n)
          throw InvalidArgument("subproblem: iterate w_prev size mismatch");
        if (!(prev.w_prev(k) >= 0.0))
          throw InvalidArgument("subproblem: w_prev must be nonnegative");
        const double wbar = std::max(prev.w_prev(k), 1e-30);
        grow = 1.0 + c / std::sqrt(wbar);
        shift = c * std::sqrt(wbar) + c * c;
      }
      LinExpr link;
      link.add(lay.lift, (pbar * grow / tbar_w) * rj).add_scalar(lay.t[k], -1.0);
      p.inequalities.push_back(
          {std::move(link), -(pbar * shift + sigma2) / tbar_w, "jam_link" + id});
      if (std::isfinite(tau)) {
        const double theta = std::sqrt(tau / pbar) - c;
        if (theta <= 0.0)
          throw InfeasibleProblem("jamming threshold below the uncertainty floor", {k});
        LinExpr cap;
        cap.add(lay.lift, rj / (theta * theta));
        p.inequalities.push_back({std::move(cap), 1.0, "jam_cap" + id});
      }
    }
  }
  if (layout) *layout = lay;
  return p;
}

SdrResult solve_phase_sdr(const SdrContext& ctx, const PhaseConfig& init,
                          const SdrOptions& opt) {
  const int n = ctx.n_users();
  if (n == 0) throw InvalidArgument("solve_phase_sdr: context has no users");
  const int m = ctx.n_elements();
  const int d = m + 1;
  if (init.phase_r.size() != m)
    throw InvalidArgument("solve_phase_sdr: initial phase count mismatch");
  if (!(ctx.noise_w > 0.0)) throw InvalidArgument("solve_phase_sdr: noise must be positive");
  if (opt.max_iterations < 1) throw InvalidArgument("solve_phase_sdr: need an iteration");
  ctx.robust.validate(n);

  {
    const std::vector<int> bad = infeasible_users(ctx.jam, ctx.robust);
    if (!bad.empty())
      throw InfeasibleProblem("jamming thresholds unattainable for some users", bad);
  }

  const VectorXcd q0 = lift_vector(init.phase_r);
  std::vector<bool> active(n);
  std::vector<MatrixXcd> rj(n);
  int nj_max = 0;
  for (int k = 0; k < n; ++k) {
    active[k] = ctx.desired[k].norm() > 0.0;
    rj[k] = ctx.jam_coefficient(k);
    nj_max = std::max(nj_max, static_cast<int>(ctx.jam[k].rows()));
  }

  SdrIterate prev;
  prev.u = VectorXd::Zero(n);
  prev.t = VectorXd::Zero(n);
  prev.w_prev = VectorXd::Zero(n);
  double obj_prev = 0.0;
  for (int k = 0; k < n; ++k) {
    prev.t(k) = ctx.worst_case(k, q0) + ctx.noise_w;
    if (active[k]) {
      const VectorXcd qs = ctx.fold_desired[k] ? ctx.fold_lift(q0) : q0;
      prev.u(k) = std::max(std::norm(ctx.desired[k].dot(qs)) / prev.t(k), 1e-9);
    }
    const VectorXcd qj = ctx.fold_jam[k] ? ctx.fold_lift(q0) : q0;
    prev.w_prev(k) = (ctx.jam[k] * qj).squaredNorm();
    obj_prev += std::log2(1.0 + prev.u(k));
  }

  SolverOptions sopt = opt.solver;
  sopt.max_block_dim = std::max({sopt.max_block_dim, d, nj_max + d});

  SdrResult out;
  MatrixXcd xi;
  for (int iter = 1; iter <= opt.max_iterations; ++iter) {
    SdrLayout lay;
    ConicProblem p = build_sca_subproblem(ctx, prev, opt.form, &lay);
    const SolverResult res = solve_refined(p, lay, active, opt, sopt, iter);

    xi = res.block_values[lay.lift];
    double obj = 0.0;
    for (int k = 0; k < n; ++k) {
      const double uk =
          std::max(res.block_values[lay.u[k]](0, 0).real(), 0.0) * lay.u_scale[k];
      prev.u(k) = active[k] ? std::max(uk, 1e-12) : 0.0;
      prev.t(k) = std::max(res.block_values[lay.t[k]](0, 0).real() * lay.t_scale[k],
                           ctx.noise_w);
      prev.w_prev(k) = std::max(herm_inner(rj[k], xi), 0.0);
      obj += std::log2(1.0 + uk);
    }
    out.trace.push_back({iter, obj, res.primal_infeas, res.status});
    const bool settled =
        iter > 1 && obj - obj_prev <= opt.objective_tol * std::max(1.0, std::abs(obj_prev));
    obj_prev = obj;
    if (settled) {
      out.converged = true;
      break;
    }
  }

  out.xi = (xi + xi.adjoint()) / 2.0;
  const RankOneResult rr = principal_rank_one(out.xi);
  if (rr.ratio >= opt.eigen_ratio) {
    out.lift = project_unit(rr.v1);
  } else {
    auto objective = [&](const VectorXcd& cand) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) {
        if (!active[k]) continue;
        const VectorXcd qs = ctx.fold_desired[k] ? ctx.fold_lift(cand) : cand;
        const double s = std::norm(ctx.desired[k].dot(qs));
        v += std::log2(1.0 + s / (ctx.worst_case(k, cand) + ctx.noise_w));
      }
      return v;
    };
    auto feasible = [&](const VectorXcd& cand) {
      for (int k = 0; k < n; ++k)
        if (!(ctx.worst_case(k, cand) <= ctx.robust.tau(k))) return false;
      return true;
    };
    out.lift = randomize_rank_one(out.xi, opt.randomize_trials, objective, feasible, opt.seed);
  }
  out.continuous = phases_from_lift(out.lift, ctx.slope, ctx.intercept);
  return out;
}

SdrResult solve_jam_min_sdr(const SdrContext& ctx, const SdrOptions& opt) {
  const int n = ctx.n_users();
  if (n == 0) throw InvalidArgument("solve_jam_min_sdr: context has no users");
  const int m = ctx.n_elements();
  const int d = m + 1;
  ctx.robust.validate(n);

  MatrixXcd total = MatrixXcd::Zero(d, d);
  for (int k = 0; k < n; ++k) total += ctx.jam_coefficient(k);

  SdrResult out;
  if (total.norm() == 0.0) {
    // No coupling between the surface and the jamming bound: any profile is
    // as good as any other.
    out.lift = VectorXcd::Ones(d);
    out.xi = out.lift * out.lift.adjoint();
    out.continuous = phases_from_lift(out.lift, ctx.slope, ctx.intercept);
    out.converged = true;
    return out;
  }

  const double scale = std::max(total.trace().real(), 1e-300);
  ConicProblem p;
  p.maximize = false;
  const int lift = p.add_block("lift", d);
  for (int i = 0; i < d; ++i) p.pin(lift, i, i, 1.0);
  p.objective.add(lift, total / scale);

  SolverOptions sopt = opt.solver;
  sopt.max_block_dim = std::max(sopt.max_block_dim, d);
  const SolverResult res = solve_conic(p, sopt);
  if (res.status == SolveStatus::kInfeasible)
    throw OmnibeamError("jamming relaxation reported infeasible");
  if (res.status == SolveStatus::kMaxIterations && !(res.gap < 1e-4))
    throw OmnibeamError("jamming relaxation failed to converge");

  out.xi = (res.block_values[lift] + res.block_values[lift].adjoint()) / 2.0;
  const RankOneResult rr = principal_rank_one(out.xi);
  if (rr.ratio >= opt.eigen_ratio) {
    out.lift = project_unit(rr.v1);
  } else {
    auto objective = [&](const VectorXcd& cand) {
      double v = 0.0;
      for (int k = 0; k < n; ++k) v -= ctx.worst_case(k, cand);
      return v;
    };
    auto feasible = [&](const VectorXcd& cand) {
      for (int k = 0; k < n; ++k)
        if (!std::isfinite(ctx.worst_case(k, cand))) return false;
      return true;
    };
    out.lift = randomize_rank_one(out.xi, opt.randomize_trials, objective, feasible, opt.seed);
  }
  out.continuous = phases_from_lift(out.lift, ctx.slope, ctx.intercept);
  out.trace.push_back({1, res.objective, res.primal_infeas, res.status});
  out.converged = true;
  return out;
}

VectorXcd randomize_rank_one(const MatrixXcd& xi, int trials,
                             const std::function<double(const VectorXcd&)>& objective,
                             const std::function<bool(const VectorXcd&)>& feasible,
                             uint64_t seed) {
  if (trials < 1) throw InvalidArgument("randomize_rank_one: need at least one trial");
  const int d = static_cast<int>(xi.rows());
  if (d < 1 || xi.cols() != d) throw InvalidArgument("randomize_rank_one: square input");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es((xi + xi.adjoint()) / 2.0);
  MatrixXcd l = es.eigenvectors();
  for (int i = 0; i < d; ++i) l.col(i) *= std::sqrt(std::max(es.eigenvalues()(i), 0.0));

  bool found = false;
  double best = 0.0;
  VectorXcd best_q;
  for (int t = 0; t < trials; ++t) {
    Rng rng(trial_seed(seed, t));
    const VectorXcd q = project_unit(l * rng.cnormal_vector(d));
    if (!feasible(q)) continue;
    const double score = objective(q);
    if (!found || score > best) {
      found = true;
      best = score;
      best_q = q;
    }
  }
  if (!found)
    throw NoFeasibleCandidate("no candidate met the jamming caps in " +
                              std::to_string(trials) + " draws");
  return best_q;
}

DiscretizeResult discretize_local_search(
    const PhaseConfig& continuous, const Codebook& cb,
    const std::function<double(const PhaseConfig&)>& sum_rate_eval,
    const std::function<VectorXd(const PhaseConfig&)>& jamming_margin, int passes) {
  if (passes < 1) throw InvalidArgument("discretize: need at least one pass");
  const int m = continuous.n_elements();
  if (m == 0) throw InvalidArgument("discretize: empty configuration");
  if (continuous.phase_t.size() != m)
    throw InvalidArgument("discretize: phase vector size mismatch");
  if (cb.size() == 0) throw InvalidArgument("discretize: empty codebook");

  auto max_margin = [&](const PhaseConfig& cfg) {
    const VectorXd v = jamming_margin(cfg);
    return v.size() == 0 ? -std::numeric_limits<double>::infinity() : v.maxCoeff();
  };

  // Candidate entries are the two codebook states bracketing each continuous
  // phase, fixed once; later passes revisit the same pair with the other
  // elements already committed.
  std::vector<std::pair<int, int>> cand(m);
  for (int i = 0; i < m; ++i) cand[i] = bracket_entries(cb, continuous.phase_r(i));

  PhaseConfig cur = continuous;
  cur.discrete = false;
  for (int pass = 0; pass < passes; ++pass) {
    bool changed = false;
    for (int i = 0; i < m; ++i) {
      const int idx[2] = {cand[i].first, cand[i].second};
      const int ncand = idx[0] == idx[1] ? 1 : 2;
      bool have = false, best_feas = false;
      double best_rate = 0.0, best_viol = 0.0;
      int best_entry = idx[0];
      for (int c = 0; c < ncand; ++c) {
        PhaseConfig trial = cur;
        trial.phase_r(i) = cb.phase_r(idx[c]);
        trial.phase_t(i) = cb.phase_t(idx[c]);
        const double viol = max_margin(trial);
        const bool feas = viol <= 0.0;
        const double rate = sum_rate_eval(trial);
        const bool better = !have || (feas && !best_feas) ||
                            (feas && best_feas && rate > best_rate) ||
                            (!feas && !best_feas && viol < best_viol);
        if (better) {
          have = true;
          best_feas = feas;
          best_rate = rate;
          best_viol = viol;
          best_entry = idx[c];
        }
      }
      if (cur.phase_r(i) != cb.phase_r(best_entry) || cur.phase_t(i) != cb.phase_t(best_entry))
        changed = true;
      cur.phase_r(i) = cb.phase_r(best_entry);
      cur.phase_t(i) = cb.phase_t(best_entry);
    }
    if (!changed) break;
  }
  cur.discrete = true;
  DiscretizeResult out;
  out.violation = max_margin(cur) > 0.0;
  out.config = std::move(cur);
  return out;
}

}  // namespace omnibeam
