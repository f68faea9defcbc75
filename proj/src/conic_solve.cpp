#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cstdio>
#include <limits>

#include "conic_internal.hpp"

namespace omnibeam::internal {

namespace {

MatrixXcd herm(const MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

// f(S) via eigendecomposition with relative floor on eigenvalues.
MatrixXcd eig_fun(const MatrixXcd& s, double (*f)(double)) {
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(s);
  if (es.info() != Eigen::Success) throw OmnibeamError("conic: eigendecomposition failed");
  VectorXd ev = es.eigenvalues();
  const double floor = std::max(ev.cwiseAbs().maxCoeff(), 1e-300) * 1e-15;
  VectorXd fv(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) fv(i) = f(std::max(ev(i), floor));
  return es.eigenvectors() * fv.asDiagonal() * es.eigenvectors().adjoint();
}

// Largest step alpha with lam + alpha * d psd (lam spd). Returns +inf if any.
double max_step(const Eigen::LLT<MatrixXcd>& lam_llt, const MatrixXcd& d) {
  const MatrixXcd l = lam_llt.matrixL();
  MatrixXcd b = l.triangularView<Eigen::Lower>().solve(d);
  b = l.triangularView<Eigen::Lower>().solve(b.adjoint()).adjoint();
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(herm(b), Eigen::EigenvaluesOnly);
  const double lmin = es.eigenvalues().minCoeff();
  if (lmin >= -1e-300) return std::numeric_limits<double>::infinity();
  return -1.0 / lmin;
}

struct ConeState {
  MatrixXcd s, z;                  // iterates
  MatrixXcd w, winv, t, ti;        // NT scaling and its square roots
  MatrixXcd lam;                   // T^-1 S T^-1 = T Z T
  Eigen::SelfAdjointEigenSolver<MatrixXcd> lam_eig;
  Eigen::LLT<MatrixXcd> lam_llt;
  MatrixXcd rc;                    // G(x) - S
  MatrixXcd f0c;                   // G(0), constant part including pins
};

// Solve lam * X + X * lam = 2 * r in lam's eigenbasis (Jordan product inverse).
MatrixXcd lyap_solve(const ConeState& cs, const MatrixXcd& r) {
  const MatrixXcd& u = cs.lam_eig.eigenvectors();
  const VectorXd& ev = cs.lam_eig.eigenvalues();
  MatrixXcd rt = u.adjoint() * r * u;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    for (Eigen::Index j = 0; j < ev.size(); ++j)
      rt(i, j) /= 0.5 * (ev(i) + ev(j));
  return u * rt * u.adjoint();
}

class DenseKkt final : public KktBackend {
 public:
  explicit DenseKkt(const Compiled& cp) : cp_(cp) {}

  void factorize(const std::vector<MatrixXcd>& winv) override {
    const int n = cp_.n;
    m_.setZero(n, n);
    for (size_t j = 0; j < cp_.cones.size(); ++j)
      accumulate_schur_dense(cp_, static_cast<int>(j), winv[j], m_);
    // regularized Cholesky
    const double base = 1e-14 * (1.0 + m_.trace() / n);
    double reg = 0.0;
    for (int attempt = 0; attempt < 4; ++attempt) {
      MatrixXd mm = m_;
      if (reg > 0.0) mm.diagonal().array() += reg;
      llt_.compute(mm);
      if (llt_.info() == Eigen::Success) break;
      reg = (reg == 0.0) ? base : reg * 1e3;
    }
    if (llt_.info() != Eigen::Success)
      throw OmnibeamError("conic: Schur factorization failed");
    if (cp_.A.rows() > 0) {
      aty_ = llt_.solve(cp_.A.transpose());
      MatrixXd sch = cp_.A * aty_;
      sch.diagonal().array() += 1e-14 * (1.0 + sch.trace() / std::max(1, (int)sch.rows()));
      eq_llt_.compute(sch);
      if (eq_llt_.info() != Eigen::Success)
        throw OmnibeamError("conic: equality Schur factorization failed");
    }
  }

  void solve(const VectorXd& h, const VectorXd& r_eq, VectorXd& dx, VectorXd& dlam) override {
    if (cp_.A.rows() == 0) {
      dx = llt_.solve(h);
      dlam.resize(0);
      return;
    }
    const VectorXd mih = llt_.solve(h);
    dlam = eq_llt_.solve(r_eq - cp_.A * mih);
    dx = mih + aty_ * dlam;
  }

  const char* name() const override { return "dense"; }

 private:
  const Compiled& cp_;
  MatrixXd m_;
  Eigen::LLT<MatrixXd> llt_;
  Eigen::LLT<MatrixXd> eq_llt_;
  MatrixXd aty_;
};

}  // namespace

std::unique_ptr<KktBackend> make_dense_kkt(const Compiled& cp) {
  return std::make_unique<DenseKkt>(cp);
}

SolverResult solve_compiled(const Compiled& cp, const SolverOptions& opt, bool use_kron) {
  const int n = cp.n;
  const int m = static_cast<int>(cp.A.rows());
  const int nc = static_cast<int>(cp.cones.size());

  std::unique_ptr<KktBackend> kkt = use_kron ? make_kron_kkt(cp) : make_dense_kkt(cp);

  std::vector<ConeState> cs(nc);
  double dim_total = 0.0;
  VectorXd x = VectorXd::Zero(n);
  VectorXd lambda = VectorXd::Zero(m);
  for (int j = 0; j < nc; ++j) {
    const int d = cp.cones[j].dim;
    cs[j].f0c = cp.cone_value(j, x, true);
    const double eta = std::min(1e6, std::max(1.0, cs[j].f0c.norm()));
    cs[j].s = eta * MatrixXcd::Identity(d, d);
    cs[j].z = eta * MatrixXcd::Identity(d, d);
    dim_total += d;
  }

  SolverResult res;
  res.backend_used = kkt->name();
  res.block_values.resize(cp.n_blocks);

  std::vector<MatrixXcd> winv(nc), rhat(nc), ds(nc), dz(nc), dS(nc), dZ(nc);
  VectorXd h(n), q(n), dx, dlam;

  auto extract = [&]() {
    for (int b = 0; b < cp.n_blocks; ++b) res.block_values[b] = cp.block_value(b, x, true);
    res.objective = cp.obj_sign * (cp.c.dot(x) + cp.c0);
  };

  const double cnorm = 1.0 + cp.c.lpNorm<Eigen::Infinity>();
  const double bnorm = 1.0 + (m > 0 ? cp.b.lpNorm<Eigen::Infinity>() : 0.0);

  // best primal iterate seen, as a fallback for non-converged exits
  VectorXd x_best = x;
  double merit_best = std::numeric_limits<double>::infinity();
  double gap_best = 0.0, pinf_best = 0.0, dinf_best = 0.0;
  bool force_center = false;
  int stalls = 0;
  int decay = 0;

  int iter = 0;
  for (; iter < opt.max_iters; ++iter) {
    // residuals
    VectorXd adj = VectorXd::Zero(n);  // A^T(Z) + A^T lambda
    for (int j = 0; j < nc; ++j) cp.cone_adjoint(j, cs[j].z, 1.0, adj);
    if (m > 0) adj += cp.A.transpose() * lambda;
    const VectorXd r_stat = cp.c - adj;
    const VectorXd r_eq = m > 0 ? VectorXd(cp.b - cp.A * x) : VectorXd();

    double gap_sz = 0.0;
    double pinf = 0.0;
    for (int j = 0; j < nc; ++j) {
      cs[j].rc = cp.cone_value(j, x, true) - cs[j].s;
      gap_sz += herm_inner(cs[j].s, cs[j].z);
      pinf = std::max(pinf, cs[j].rc.norm() / (1.0 + cs[j].f0c.norm()));
    }
    if (m > 0) pinf = std::max(pinf, r_eq.lpNorm<Eigen::Infinity>() / bnorm);
    const double dinf = r_stat.lpNorm<Eigen::Infinity>() / cnorm;
    const double mu = gap_sz / dim_total;

    const double pobj = cp.c.dot(x) + cp.c0;
    double dobj = cp.c0 + (m > 0 ? cp.b.dot(lambda) : 0.0);
    for (int j = 0; j < nc; ++j) dobj -= herm_inner(cs[j].f0c, cs[j].z);
    const double relgap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));

    if (opt.verbose) {
      std::fprintf(stderr, "iter %3d  pobj %+.6e  dobj %+.6e  gap %.2e  pinf %.2e  dinf %.2e\n",
                   iter, pobj, dobj, relgap, pinf, dinf);
      if (iter % 25 == 0) {
        for (int j = 0; j < nc; ++j)
          std::fprintf(stderr, "    cone %2d dim %3ld  |rc| %9.2e  |s| %9.2e  |z| %9.2e  |f0| %9.2e\n",
                       j, (long)cs[j].s.rows(), cs[j].rc.norm(), cs[j].s.norm(),
                       cs[j].z.norm(), cs[j].f0c.norm());
        if (m > 0)
          std::fprintf(stderr, "    eq |b-Ax| %9.2e\n", r_eq.lpNorm<Eigen::Infinity>());
      }
    }

    if (pinf <= opt.feas_tol && dinf <= opt.feas_tol && relgap <= opt.gap_tol) {
      res.status = SolveStatus::kOptimal;
      res.iterations = iter;
      res.gap = relgap;
      res.primal_infeas = pinf;
      res.dual_infeas = dinf;
      extract();
      return res;
    }

    // primal infeasibility certificate: theta = -sum<F0,Z> + b^T lam > 0 with
    // A^T(Z) + A^T lam ~ 0 proves there is no feasible x. An approximate
    // certificate only excludes feasible points with norm below theta/hom_res,
    // so demand that radius to clear the scale the iterates actually live at.
    // Checked before the divergence cutoff: an infeasible instance drives the
    // dual objective to infinity, which is exactly what feeds the certificate.
    {
      const double theta = dobj - cp.c0;
      double znorm = 0.0;
      for (int j = 0; j < nc; ++j) znorm = std::max(znorm, cs[j].z.norm());
      const double hom_res = adj.lpNorm<Eigen::Infinity>();  // ||A^T(Z) + A^T lambda||
      // anchor the radius to the best iterate: a diverging current iterate
      // must not be able to talk the test out of a legitimate certificate
      const double radius_needed = 1e7 * (1.0 + x_best.lpNorm<Eigen::Infinity>());
      if (opt.verbose && iter % 10 == 0) {
        int imax = 0;
        x_best.cwiseAbs().maxCoeff(&imax);
        std::fprintf(stderr, "    cert theta %9.2e  znorm %9.2e  hom %9.2e  radius %9.2e  need %9.2e  argmax x_best %d (%.2e)\n",
                     theta, znorm, hom_res, theta / std::max(hom_res, 1e-300), radius_needed,
                     imax, x_best(imax));
      }
      if (theta > opt.feas_tol * std::max(1.0, znorm) &&
          hom_res * radius_needed <= theta) {
        res.status = SolveStatus::kInfeasible;
        res.iterations = iter;
        res.infeas_certificate = theta / std::max(hom_res, 1e-300);
        res.gap = relgap;
        res.primal_infeas = pinf;
        res.dual_infeas = dinf;
        extract();
        return res;
      }
    }

    const double merit = std::max({relgap, pinf, dinf});
    if (merit < merit_best) {
      merit_best = merit;
      x_best = x;
      gap_best = relgap;
      pinf_best = pinf;
      dinf_best = dinf;
      decay = 0;
    } else if (merit_best < 1e-4 && merit > 100.0 * merit_best) {
      // left the numerical floor near a solution and drifting away: keep the
      // best iterate (while far from one, keep going — a diverging dual on a
      // still-infeasible iterate is how the infeasibility certificate forms)
      if (++decay >= 3) break;
    }

    // NT scalings
    bool nt_ok = true;
    for (int j = 0; j < nc && nt_ok; ++j) {
      ConeState& k = cs[j];
      const MatrixXcd s_half = eig_fun(k.s, [](double v) { return std::sqrt(v); });
      const MatrixXcd ms = herm(s_half * k.z * s_half);
      const MatrixXcd ms_ihalf = eig_fun(ms, [](double v) { return 1.0 / std::sqrt(v); });
      k.w = herm(s_half * ms_ihalf * s_half);
      k.t = eig_fun(k.w, [](double v) { return std::sqrt(v); });
      k.ti = eig_fun(k.w, [](double v) { return 1.0 / std::sqrt(v); });
      k.winv = herm(k.ti * k.ti);
      k.lam = herm(k.ti * k.s * k.ti);
      k.lam_eig.compute(k.lam);
      if (k.lam_eig.info() != Eigen::Success) {
        nt_ok = false;
        break;
      }
      k.lam_llt.compute(k.lam);
      if (k.lam_llt.info() != Eigen::Success) {
        // lam should be PD; fall back to a slightly regularized copy
        MatrixXcd lr = k.lam;
        lr.diagonal().array() += 1e-14 * (1.0 + k.lam.norm());
        k.lam_llt.compute(lr);
        if (k.lam_llt.info() != Eigen::Success) nt_ok = false;
      }
      winv[j] = k.winv;
    }
    if (!nt_ok) break;  // numerical floor reached, fall back to the best iterate

    try {
      kkt->factorize(winv);
    } catch (const OmnibeamError&) {
      break;  // numerically singular scaling, fall back to the best iterate
    }

    auto build_h_and_solve = [&]() {
      q.setZero();
      for (int j = 0; j < nc; ++j) {
        const MatrixXcd nmat =
            herm(cs[j].ti * rhat[j] * cs[j].ti - cs[j].winv * cs[j].rc * cs[j].winv);
        cp.cone_adjoint(j, nmat, 1.0, q);
      }
      h = q - r_stat;
      kkt->solve(h, r_eq, dx, dlam);
      if (use_kron) {
        // pure standard form: the adjoint is bijective per block, so recover
        // dZ from the dual feasibility row and dS from the primal one. Both
        // feasibility rows are then exact by construction (multiplier noise
        // cancels structurally in the dual row), and the KKT solve error
        // lands in the complementarity equation, which the iteration
        // re-targets from scratch each time instead of accumulating.
        VectorXd rhs = r_stat;
        if (m > 0) rhs -= cp.A.transpose() * dlam;
        for (int j = 0; j < nc; ++j) {
          const int b = cp.cones[j].block;
          const int d = cp.block_dim[b];
          MatrixXcd dzm = MatrixXcd::Zero(d, d);
          for (int gd : cp.block_dofs[b]) {
            const Dof& df = cp.dofs[gd];
            const double a = rhs(gd) * (df.kind == Dof::kDiag ? 1.0 : 0.5);
            for (int t = 0; t < df.n_atoms; ++t)
              dzm(df.atoms[t].p, df.atoms[t].q) += a * df.atoms[t].c;
          }
          dZ[j] = dzm;
          dz[j] = herm(cs[j].t * dzm * cs[j].t);
          dS[j] = cp.cone_value(j, dx, false) + cs[j].rc;
          ds[j] = herm(cs[j].ti * dS[j] * cs[j].ti);
        }
        return;
      }
      for (int j = 0; j < nc; ++j) {
        dS[j] = cp.cone_value(j, dx, false) + cs[j].rc;
        ds[j] = herm(cs[j].ti * dS[j] * cs[j].ti);
        dz[j] = rhat[j] - ds[j];
        dZ[j] = herm(cs[j].ti * dz[j] * cs[j].ti);
      }
    };

    // predictor (affine scaling): rhat = -lam
    for (int j = 0; j < nc; ++j) rhat[j] = -cs[j].lam;
    build_h_and_solve();

    double ap = 1.0, ad = 1.0;
    for (int j = 0; j < nc; ++j) {
      ap = std::min(ap, 0.99 * max_step(cs[j].lam_llt, ds[j]));
      ad = std::min(ad, 0.99 * max_step(cs[j].lam_llt, dz[j]));
    }
    double gap_aff = 0.0;
    for (int j = 0; j < nc; ++j)
      gap_aff += herm_inner(cs[j].lam + ap * ds[j], cs[j].lam + ad * dz[j]);
    gap_aff = std::max(gap_aff, 0.0);
    double sigma = std::pow(gap_aff / gap_sz, 3.0);
    sigma = std::min(std::max(sigma, 1e-8), 1.0 - 1e-8);
    if (force_center) {
      sigma = std::max(sigma, 0.9);
      force_center = false;
    }

    // corrector
    for (int j = 0; j < nc; ++j) {
      const int d = cp.cones[j].dim;
      const MatrixXcd cross = 0.5 * (ds[j] * dz[j] + dz[j] * ds[j]);
      const MatrixXcd target = sigma * mu * MatrixXcd::Identity(d, d) -
                               cs[j].lam * cs[j].lam - cross;
      rhat[j] = lyap_solve(cs[j], herm(target));
    }
    build_h_and_solve();

    ap = 1.0;
    ad = 1.0;
    for (int j = 0; j < nc; ++j) {
      ap = std::min(ap, 0.99 * max_step(cs[j].lam_llt, ds[j]));
      ad = std::min(ad, 0.99 * max_step(cs[j].lam_llt, dz[j]));
    }
    if (ap < 1e-10 && ad < 1e-10) {
      // stalled: try one forced centering step before giving up
      if (stalls++ > 0) break;
      force_center = true;
      continue;
    }

    x += ap * dx;
    if (m > 0) lambda += ad * dlam;
    for (int j = 0; j < nc; ++j) {
      cs[j].s = herm(cs[j].t * (cs[j].lam + ap * ds[j]) * cs[j].t);
      cs[j].z = herm(cs[j].ti * (cs[j].lam + ad * dz[j]) * cs[j].ti);
    }
  }

  // not converged: report the best iterate seen
  res.status = SolveStatus::kMaxIterations;
  res.iterations = iter;
  x = x_best;
  res.gap = gap_best;
  res.primal_infeas = pinf_best;
  res.dual_infeas = dinf_best;
  extract();
  return res;
}

SolverResult solve_conic_impl(const ConicProblem& p, const SolverOptions& opt) {
  using Backend = SolverOptions::Backend;
  Backend want = opt.backend;
  if (want == Backend::kAuto)
    want = standard_form_profitable(p) ? Backend::kStructured : Backend::kDense;
  if (want == Backend::kStructured) {
    for (const auto& b : p.blocks)
      if (!b.psd)
        throw InvalidArgument(
            "conic: structured backend requires every block psd (free scalars "
            "are not supported)");
    const ConicProblem sp = standardize(p);
    Compiled cp = compile(sp, opt);
    SolverResult res = solve_compiled(cp, opt, true);
    res.block_values.resize(p.blocks.size());  // drop slack blocks
    return res;
  }
  Compiled cp = compile(p, opt);
  return solve_compiled(cp, opt, false);
}

}  // namespace omnibeam::internal

namespace omnibeam {

SolverResult solve_conic(const ConicProblem& problem, const SolverOptions& options) {
  return internal::solve_conic_impl(problem, options);
}

}  // namespace omnibeam
