#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <map>
#include <set>
#include <tuple>
#include <utility>
#include <vector>

#include "conic_internal.hpp"

// Structured route for problems dominated by one large PSD block: rewrite to
// pure standard form (standardize), then solve the per-iteration KKT system
// with a backend that inverts the block-diagonal dof metric by congruence and
// factorizes only the small multiplier Schur complement. Both factorizations
// involved (eigendecomposition of the metric, Cholesky of the multiplier
// Schur) are backward stable, so the route stays usable at tight duality gaps
// where the metric condition number blows up.

namespace omnibeam::internal {

namespace {

MatrixXcd herm(const MatrixXcd& m) { return 0.5 * (m + m.adjoint()); }

// Hermitian basis matrix of one real coordinate of a d x d Hermitian matrix.
MatrixXcd coord_basis(int d, int i, int j, Dof::Kind kind) {
  MatrixXcd b = MatrixXcd::Zero(d, d);
  switch (kind) {
    case Dof::kDiag:
      b(i, i) = 1.0;
      break;
    case Dof::kRe:
      b(i, j) = 1.0;
      b(j, i) = 1.0;
      break;
    case Dof::kIm:
      b(i, j) = cplx(0.0, 1.0);
      b(j, i) = cplx(0.0, -1.0);
      break;
  }
  return b;
}

// <coord_basis(i,j,kind), f0>
double coord_of(const MatrixXcd& f0, int i, int j, Dof::Kind kind) {
  switch (kind) {
    case Dof::kDiag:
      return f0(i, i).real();
    case Dof::kRe:
      return 2.0 * f0(i, j).real();
    case Dof::kIm:
      return 2.0 * f0(i, j).imag();
  }
  return 0.0;
}

}  // namespace

ConicProblem standardize(const ConicProblem& p) {
  ConicProblem q;
  q.blocks = p.blocks;
  q.equalities = p.equalities;
  q.objective = p.objective;
  q.maximize = p.maximize;

  const int nb = static_cast<int>(p.blocks.size());

  // entry pins -> equality rows on the (now unpinned) block
  std::vector<std::set<std::pair<int, int>>> seen(nb);
  for (const auto& pin : p.pins) {
    if (pin.block < 0 || pin.block >= nb) throw InvalidArgument("pin: bad block index");
    const int d = p.blocks[pin.block].dim;
    if (pin.i < 0 || pin.j >= d || pin.i > pin.j) throw InvalidArgument("pin: bad entry index");
    if (d == 1) throw InvalidArgument("pin: scalar blocks cannot be pinned (use constants)");
    if (pin.i == pin.j && std::abs(pin.value.imag()) > 0.0)
      throw InvalidArgument("pin: diagonal pin must be real");
    if (!seen[pin.block].insert({pin.i, pin.j}).second)
      throw InvalidArgument("pin: duplicate pin on block " + std::to_string(pin.block));
    if (pin.i == pin.j) {
      ConicProblem::EqCon e;
      e.lhs.add(pin.block, coord_basis(d, pin.i, pin.i, Dof::kDiag));
      e.rhs = pin.value.real();
      e.name = "pin";
      q.equalities.push_back(std::move(e));
    } else {
      ConicProblem::EqCon er;
      er.lhs.add(pin.block, coord_basis(d, pin.i, pin.j, Dof::kRe));
      er.rhs = 2.0 * pin.value.real();
      er.name = "pin re";
      q.equalities.push_back(std::move(er));
      ConicProblem::EqCon ei;
      ei.lhs.add(pin.block, coord_basis(d, pin.i, pin.j, Dof::kIm));
      ei.rhs = 2.0 * pin.value.imag();
      ei.name = "pin im";
      q.equalities.push_back(std::move(ei));
    }
  }

  // inequalities lhs <= rhs  ->  lhs + slack == rhs with slack >= 0
  for (const auto& iq : p.inequalities) {
    const std::string nm = iq.name.empty() ? std::string("ineq") : iq.name;
    const int s = q.add_block("slack:" + nm, 1, true);
    ConicProblem::EqCon e;
    e.lhs = iq.lhs;
    e.lhs.add_scalar(s, 1.0);
    e.rhs = iq.rhs;
    e.name = nm;
    q.equalities.push_back(std::move(e));
  }

  // affine LMIs F(x) >= 0 -> PSD slack block S tied entrywise to F(x)
  for (const auto& lmi : p.lmis) {
    const int dl = lmi.dim;
    const std::string nm = lmi.name.empty() ? std::string("lmi") : lmi.name;
    if (dl < 1) throw InvalidArgument("lmi '" + nm + "': dim < 1");
    for (const auto& sw : lmi.sandwiches) {
      if (sw.block < 0 || sw.block >= nb) throw InvalidArgument("lmi sandwich: bad block");
      if (sw.g.rows() != dl || sw.g.cols() != p.blocks[sw.block].dim)
        throw InvalidArgument("lmi '" + nm + "': sandwich G dimension mismatch");
      if (sw.mask.size() > 0 && sw.mask.rows() != p.blocks[sw.block].dim)
        throw InvalidArgument("lmi '" + nm + "': mask dimension mismatch");
    }
    for (const auto& sc : lmi.scalar_terms) {
      if (sc.block < 0 || sc.block >= nb || p.blocks[sc.block].dim != 1)
        throw InvalidArgument("lmi '" + nm + "': scalar term must reference a 1x1 block");
      if (sc.d.rows() != dl) throw InvalidArgument("lmi '" + nm + "': scalar D mismatch");
    }
    for (const auto& tt : lmi.trace_terms) {
      if (tt.block < 0 || tt.block >= nb) throw InvalidArgument("lmi trace: bad block");
      if (tt.a.rows() != p.blocks[tt.block].dim || tt.t.rows() != dl)
        throw InvalidArgument("lmi '" + nm + "': trace term dimension mismatch");
    }
    const int s = q.add_block("slack:" + nm, dl, true);
    const MatrixXcd f0 = lmi.f0.size() > 0 ? herm(lmi.f0) : MatrixXcd(MatrixXcd::Zero(dl, dl));
    if (f0.rows() != dl) throw InvalidArgument("lmi '" + nm + "': f0 dim mismatch");
    for (int i = 0; i < dl; ++i) {
      for (int j = i; j < dl; ++j) {
        const int kinds = (i == j) ? 1 : 2;
        for (int kp = 0; kp < kinds; ++kp) {
          const Dof::Kind kind = (i == j) ? Dof::kDiag : (kp == 0 ? Dof::kRe : Dof::kIm);
          const MatrixXcd bmat = coord_basis(dl, i, j, kind);
          ConicProblem::EqCon e;
          e.name = nm + ":coord";
          e.lhs.add(s, bmat);
          e.rhs = coord_of(f0, i, j, kind);
          // <bmat, S> - <bmat, linear part of F(x)> == <bmat, f0>
          std::map<int, MatrixXcd> mcoef;
          auto acc = [&](int blk) -> MatrixXcd& {
            auto it = mcoef.find(blk);
            if (it == mcoef.end()) {
              const int db = p.blocks[blk].dim;
              it = mcoef.emplace(blk, MatrixXcd::Zero(db, db)).first;
            }
            return it->second;
          };
          for (const auto& sw : lmi.sandwiches) {
            // <bmat, sign G (mask o X) G^H> = sign <(G^H bmat G) o mask^T, X>
            MatrixXcd c = sw.g.adjoint() * bmat * sw.g;
            if (sw.mask.size() > 0) c = c.cwiseProduct(sw.mask.transpose());
            acc(sw.block) -= sw.sign * herm(c);
          }
          for (const auto& tt : lmi.trace_terms)
            acc(tt.block) -= herm_inner(herm(tt.t), bmat) * herm(tt.a);
          for (auto& [blk, mat] : mcoef)
            if (mat.cwiseAbs().maxCoeff() > 0.0) e.lhs.add(blk, std::move(mat));
          for (const auto& sc : lmi.scalar_terms) {
            const double v = herm_inner(herm(sc.d), bmat);
            if (v != 0.0) e.lhs.add_scalar(sc.block, -v);
          }
          q.equalities.push_back(std::move(e));
        }
      }
    }
  }
  return q;
}

bool standard_form_profitable(const ConicProblem& p) {
  constexpr int kBigDim = 12;
  int dmax = 0;
  long n_free = 0;
  for (const auto& b : p.blocks) {
    if (!b.psd) return false;
    dmax = std::max(dmax, b.dim);
    n_free += static_cast<long>(b.dim) * b.dim;
  }
  if (dmax < kBigDim) return false;
  long m_std = static_cast<long>(p.equalities.size()) + static_cast<long>(p.inequalities.size());
  for (const auto& pin : p.pins) {
    const long k = (pin.i == pin.j) ? 1 : 2;
    m_std += k;
    n_free -= k;
  }
  for (const auto& l : p.lmis) m_std += static_cast<long>(l.dim) * l.dim;
  return m_std <= n_free;
}

namespace {

// LLT with an escalating diagonal shift; the multiplier Schur complement is
// SPD up to roundoff but can lose definiteness at the working precision.
class ShiftedLlt {
 public:
  void compute(const MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    if (n == 0) return;
    const double base = 1e-14 * (1.0 + std::abs(m.trace()) / n);
    double reg = 0.0;
    for (int attempt = 0; attempt < 8; ++attempt) {
      MatrixXd mm = m;
      if (reg > 0.0) mm.diagonal().array() += reg;
      llt_.compute(mm);
      if (llt_.info() == Eigen::Success) return;
      reg = (reg == 0.0) ? base : reg * 1e3;
    }
    throw OmnibeamError("conic: multiplier Schur factorization failed");
  }
  VectorXd solve(const VectorXd& r) const { return llt_.solve(r); }

 private:
  Eigen::LLT<MatrixXd> llt_;
};

class KronKkt final : public KktBackend {
 public:
  explicit KronKkt(const Compiled& cp) : cp_(cp) {
    cone_of_block_.assign(cp_.n_blocks, -1);
    for (size_t j = 0; j < cp_.cones.size(); ++j) {
      if (!cp_.cones[j].is_block_cone)
        throw InvalidArgument("conic: kron backend requires pure block-cone form");
      cone_of_block_[cp_.cones[j].block] = static_cast<int>(j);
    }
    for (int b = 0; b < cp_.n_blocks; ++b) {
      if (cone_of_block_[b] < 0)
        throw InvalidArgument("conic: kron backend requires every block psd");
      if (static_cast<int>(cp_.block_dofs[b].size()) != cp_.block_dim[b] * cp_.block_dim[b])
        throw InvalidArgument("conic: kron backend requires unpinned blocks");
    }

    // per-row structure: nonzero (dof, coef) list plus, per touched block,
    // either an atom list (sparse rows) or the dense halfscaled functional
    const int m = static_cast<int>(cp_.A.rows());
    rows_.resize(m);
    nz_.resize(m);
    for (int i = 0; i < m; ++i) {
      for (int b = 0; b < cp_.n_blocks; ++b) {
        const auto& bd = cp_.block_dofs[b];
        std::vector<std::pair<int, double>> local;  // (dof position in block, coef)
        for (size_t k = 0; k < bd.size(); ++k) {
          const double a = cp_.A(i, bd[k]);
          if (a == 0.0) continue;
          local.push_back({static_cast<int>(k), a});
          nz_[i].push_back({bd[k], a});
        }
        if (local.empty()) continue;
        RowBlock rb;
        rb.block = b;
        if (local.size() <= 2) {
          for (const auto& [k, a] : local) {
            const Dof& d = cp_.dofs[bd[k]];
            const double inv_n = (d.kind == Dof::kDiag) ? 1.0 : 0.5;
            for (int t = 0; t < d.n_atoms; ++t)
              rb.atoms.push_back({d.atoms[t].p, d.atoms[t].q, a * inv_n * d.atoms[t].c});
          }
        } else {
          const int dim = cp_.block_dim[b];
          rb.hmat = MatrixXcd::Zero(dim, dim);
          for (const auto& [k, a] : local) {
            const Dof& d = cp_.dofs[bd[k]];
            const double inv_n = (d.kind == Dof::kDiag) ? 1.0 : 0.5;
            for (int t = 0; t < d.n_atoms; ++t)
              rb.hmat(d.atoms[t].p, d.atoms[t].q) += a * inv_n * d.atoms[t].c;
          }
        }
        rows_[i].push_back(std::move(rb));
      }
    }
    es_.resize(cp_.n_blocks);
    mu_.resize(cp_.n_blocks);
  }

  void factorize(const std::vector<MatrixXcd>& winv) override {
    winv_ = &winv;
    // eigendecompose each block metric; the congruence solves below act
    // entrywise in this basis, which keeps them backward stable however
    // ill-conditioned the metric gets near convergence
    for (int b = 0; b < cp_.n_blocks; ++b) {
      es_[b].compute(winv[cone_of_block_[b]]);
      if (es_[b].info() != Eigen::Success)
        throw OmnibeamError("conic: metric eigendecomposition failed");
      mu_[b] = es_[b].eigenvalues();
      const double floor = mu_[b].cwiseAbs().maxCoeff() * 1e-30 + 1e-300;
      mu_[b] = mu_[b].cwiseMax(floor);
    }

    const int m = static_cast<int>(cp_.A.rows());
    ay_.resize(cp_.n, m);
    for (int i = 0; i < m; ++i) {
      VectorXd col = VectorXd::Zero(cp_.n);
      for (const auto& rb : rows_[i]) {
        MatrixXcd y;
        if (!rb.atoms.empty()) {
          const int dim = cp_.block_dim[rb.block];
          y = MatrixXcd::Zero(dim, dim);
          for (const auto& [pp, qq, c] : rb.atoms)
            y.noalias() += c * (metric_col(rb.block, pp) * metric_col(rb.block, qq).adjoint());
          y = herm(y);
        } else {
          y = metric_solve(rb.block, rb.hmat);
        }
        read_coords(rb.block, y, col);
      }
      ay_.col(i) = col;
    }

    if (m > 0) {
      MatrixXd sch(m, m);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) {
          double v = 0.0;
          for (const auto& [gd, a] : nz_[i]) v += a * ay_(gd, j);
          sch(i, j) = v;
        }
      sch = 0.5 * (sch + sch.transpose()).eval();
      eq_.compute(sch);
    }
  }

  void solve(const VectorXd& h, const VectorXd& r_eq, VectorXd& dx, VectorXd& dlam) override {
    const int m = static_cast<int>(cp_.A.rows());
    base_solve(h, r_eq, dx, dlam);
    // one guarded refinement pass against the driver's metric
    VectorXd r1, r2;
    const double rn0 = kkt_residual(h, r_eq, dx, dlam, r1, r2);
    const double scale = std::max(
        {1.0, h.lpNorm<Eigen::Infinity>(), m > 0 ? r_eq.lpNorm<Eigen::Infinity>() : 0.0});
    if (rn0 > 1e-13 * scale) {
      VectorXd cx, cl;
      base_solve(r1, r2, cx, cl);
      VectorXd dx2 = dx + cx;
      VectorXd dlam2 = m > 0 ? VectorXd(dlam + cl) : VectorXd();
      VectorXd t1, t2;
      const double rn1 = kkt_residual(h, r_eq, dx2, dlam2, t1, t2);
      if (rn1 < rn0) {
        dx.swap(dx2);
        dlam.swap(dlam2);
      }
    }
  }

  const char* name() const override { return "structured"; }

 private:
  struct RowBlock {
    int block = -1;
    std::vector<std::tuple<int, int, cplx>> atoms;  // halfscaled functional, sparse
    MatrixXcd hmat;                                 // halfscaled functional, dense
  };

  // column a of the inverse metric W = winv^-1
  VectorXcd metric_col(int b, int a) const {
    const MatrixXcd& u = es_[b].eigenvectors();
    VectorXcd t = u.row(a).adjoint();
    t.array() /= mu_[b].array();
    return u * t;
  }

  // Y with winv Y winv = H, solved entrywise in the metric eigenbasis
  MatrixXcd metric_solve(int b, const MatrixXcd& hm) const {
    const MatrixXcd& u = es_[b].eigenvectors();
    MatrixXcd t = u.adjoint() * hm * u;
    const VectorXd& mu = mu_[b];
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) /= mu(r) * mu(c);
    return u * t * u.adjoint();
  }

  // write the Hermitian matrix's real coordinates into out over block dofs
  void read_coords(int b, const MatrixXcd& y, VectorXd& out) const {
    const auto& bd = cp_.block_dofs[b];
    for (size_t k = 0; k < bd.size(); ++k) {
      const Dof& d = cp_.dofs[bd[k]];
      switch (d.kind) {
        case Dof::kDiag:
          out(bd[k]) = y(d.i, d.i).real();
          break;
        case Dof::kRe:
          out(bd[k]) = y(d.i, d.j).real();
          break;
        case Dof::kIm:
          out(bd[k]) = y(d.i, d.j).imag();
          break;
      }
    }
  }

  // Hermitian matrix with the given dof coordinates (inverse of read_coords)
  MatrixXcd write_mat(int b, const VectorXd& x) const {
    const int dim = cp_.block_dim[b];
    MatrixXcd y = MatrixXcd::Zero(dim, dim);
    const auto& bd = cp_.block_dofs[b];
    for (size_t k = 0; k < bd.size(); ++k) {
      const Dof& d = cp_.dofs[bd[k]];
      const double v = x(bd[k]);
      switch (d.kind) {
        case Dof::kDiag:
          y(d.i, d.i) += v;
          break;
        case Dof::kRe:
          y(d.i, d.j) += v;
          y(d.j, d.i) += v;
          break;
        case Dof::kIm:
          y(d.i, d.j) += cplx(0.0, v);
          y(d.j, d.i) += cplx(0.0, -v);
          break;
      }
    }
    return y;
  }

  // halfscaled functional matrix of a coefficient vector over block b
  MatrixXcd half_mat(int b, const VectorXd& v) const {
    const int dim = cp_.block_dim[b];
    MatrixXcd y = MatrixXcd::Zero(dim, dim);
    const auto& bd = cp_.block_dofs[b];
    for (size_t k = 0; k < bd.size(); ++k) {
      const Dof& d = cp_.dofs[bd[k]];
      const double inv_n = (d.kind == Dof::kDiag) ? 1.0 : 0.5;
      const double a = v(bd[k]) * inv_n;
      for (int t = 0; t < d.n_atoms; ++t) y(d.atoms[t].p, d.atoms[t].q) += a * d.atoms[t].c;
    }
    return y;
  }

  VectorXd minv_apply(const VectorXd& v) const {
    VectorXd out(cp_.n);
    for (int b = 0; b < cp_.n_blocks; ++b)
      read_coords(b, metric_solve(b, half_mat(b, v)), out);
    return out;
  }

  VectorXd m_apply(const VectorXd& x) const {
    VectorXd out(cp_.n);
    for (int b = 0; b < cp_.n_blocks; ++b) {
      const MatrixXcd& wi = (*winv_)[cone_of_block_[b]];
      const MatrixXcd z = wi * write_mat(b, x) * wi;
      const auto& bd = cp_.block_dofs[b];
      for (size_t k = 0; k < bd.size(); ++k) {
        const Dof& d = cp_.dofs[bd[k]];
        switch (d.kind) {
          case Dof::kDiag:
            out(bd[k]) = z(d.i, d.i).real();
            break;
          case Dof::kRe:
            out(bd[k]) = 2.0 * z(d.i, d.j).real();
            break;
          case Dof::kIm:
            out(bd[k]) = 2.0 * z(d.i, d.j).imag();
            break;
        }
      }
    }
    return out;
  }

  VectorXd apply_a(const VectorXd& x) const {
    const int m = static_cast<int>(cp_.A.rows());
    VectorXd out(m);
    for (int i = 0; i < m; ++i) {
      double v = 0.0;
      for (const auto& [gd, a] : nz_[i]) v += a * x(gd);
      out(i) = v;
    }
    return out;
  }

  VectorXd apply_at(const VectorXd& y) const {
    VectorXd out = VectorXd::Zero(cp_.n);
    const int m = static_cast<int>(cp_.A.rows());
    for (int i = 0; i < m; ++i)
      for (const auto& [gd, a] : nz_[i]) out(gd) += a * y(i);
    return out;
  }

  void base_solve(const VectorXd& h, const VectorXd& r_eq, VectorXd& dx, VectorXd& dlam) const {
    const int m = static_cast<int>(cp_.A.rows());
    const VectorXd mih = minv_apply(h);
    if (m == 0) {
      dx = mih;
      dlam.resize(0);
      return;
    }
    dlam = eq_.solve(r_eq - apply_a(mih));
    dx = mih + ay_ * dlam;
  }

  double kkt_residual(const VectorXd& h, const VectorXd& r_eq, const VectorXd& dx,
                      const VectorXd& dlam, VectorXd& r1, VectorXd& r2) const {
    const int m = static_cast<int>(cp_.A.rows());
    r1 = h - m_apply(dx);
    if (m > 0) {
      r1 += apply_at(dlam);
      r2 = r_eq - apply_a(dx);
      return std::max(r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>());
    }
    r2.resize(0);
    return r1.lpNorm<Eigen::Infinity>();
  }

  const Compiled& cp_;
  std::vector<int> cone_of_block_;
  std::vector<std::vector<RowBlock>> rows_;
  std::vector<std::vector<std::pair<int, double>>> nz_;
  std::vector<Eigen::SelfAdjointEigenSolver<MatrixXcd>> es_;
  std::vector<VectorXd> mu_;
  const std::vector<MatrixXcd>* winv_ = nullptr;
  MatrixXd ay_;
  ShiftedLlt eq_;
};

}  // namespace

std::unique_ptr<KktBackend> make_kron_kkt(const Compiled& cp) {
  return std::make_unique<KronKkt>(cp);
}

}  // namespace omnibeam::internal
