#include <algorithm>
#include <set>

#include "conic_internal.hpp"

namespace omnibeam::internal {

namespace {

void check_hermitian(const MatrixXcd& m, const std::string& what) {
  if (m.rows() != m.cols()) throw InvalidArgument(what + ": square matrix required");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw InvalidArgument(what + ": matrix must be Hermitian");
}

// Coefficient of a linear functional Re tr(A X_b) w.r.t. one dof of the block.
double trace_coef(const MatrixXcd& a, const Dof& d) {
  switch (d.kind) {
    case Dof::kDiag:
      return a(d.i, d.i).real();
    case Dof::kRe:
      return 2.0 * a(d.i, d.j).real();
    case Dof::kIm:
      return 2.0 * a(d.i, d.j).imag();
  }
  return 0.0;
}

}  // namespace

MatrixXcd Compiled::block_value(int b, const VectorXd& x, bool include_pins) const {
  MatrixXcd m = include_pins ? pin_base[b] : MatrixXcd::Zero(block_dim[b], block_dim[b]).eval();
  for (int gd : block_dofs[b]) {
    const Dof& d = dofs[gd];
    const double v = x(gd);
    for (int t = 0; t < d.n_atoms; ++t) {
      const DofAtom& a = d.atoms[t];
      m(a.p, a.q) += v * a.c;
    }
  }
  return m;
}

MatrixXcd Compiled::cone_value(int j, const VectorXd& x, bool include_const) const {
  const Cone& cn = cones[j];
  if (cn.is_block_cone) return block_value(cn.block, x, include_const);
  MatrixXcd g = include_const && cn.f0.size() > 0
                    ? MatrixXcd(cn.f0)
                    : MatrixXcd::Zero(cn.dim, cn.dim).eval();
  for (const auto& s : cn.sandwiches) {
    MatrixXcd xb = block_value(s.block, x, include_const);
    if (s.mask.size() > 0) xb = s.mask.cwiseProduct(xb);
    g.noalias() += s.sign * (s.g * xb * s.g.adjoint());
  }
  for (const auto& sc : cn.scalars) g += x(sc.dof) * sc.d;
  for (const auto& tr : cn.traces) {
    double v = include_const ? tr.tau0 : 0.0;
    for (size_t k = 0; k < block_dofs[tr.block].size(); ++k)
      v += tr.tau(static_cast<Eigen::Index>(k)) * x(block_dofs[tr.block][k]);
    g += v * tr.t;
  }
  return g;
}

void Compiled::cone_adjoint(int j, const MatrixXcd& w, double factor, VectorXd& out) const {
  const Cone& cn = cones[j];
  if (cn.is_block_cone) {
    for (int gd : block_dofs[cn.block]) {
      const Dof& d = dofs[gd];
      double acc = 0.0;
      for (int t = 0; t < d.n_atoms; ++t) {
        const DofAtom& a = d.atoms[t];
        acc += (a.c * w(a.q, a.p)).real();
      }
      out(gd) += factor * acc;
    }
    return;
  }
  for (const auto& s : cn.sandwiches) {
    // <sign G(mask o B_d)G^H, w> = sign * sum atoms Re(c_hat * R(q,p)),
    // R = G^H w G.
    const MatrixXcd r = s.g.adjoint() * w * s.g;
    for (int gd : block_dofs[s.block]) {
      const Dof& d = dofs[gd];
      double acc = 0.0;
      for (int t = 0; t < d.n_atoms; ++t) {
        const DofAtom& a = d.atoms[t];
        cplx c = a.c;
        if (s.mask.size() > 0) c *= s.mask(a.p, a.q);
        acc += (c * r(a.q, a.p)).real();
      }
      out(gd) += factor * s.sign * acc;
    }
  }
  for (const auto& sc : cn.scalars) out(sc.dof) += factor * herm_inner(sc.d, w);
  for (const auto& tr : cn.traces) {
    const double tw = factor * herm_inner(tr.t, w);
    for (size_t k = 0; k < block_dofs[tr.block].size(); ++k)
      out(block_dofs[tr.block][k]) += tw * tr.tau(static_cast<Eigen::Index>(k));
  }
}

namespace {

// lhs functional -> (coef over dofs, constant from pins)
void linexpr_coef(const Compiled& cp, const LinExpr& e, VectorXd& coef, double& cst) {
  coef.setZero(cp.n);
  cst = e.constant;
  for (const auto& t : e.terms) {
    check_hermitian(t.coef, "linear term coefficient");
    if (t.coef.rows() != cp.block_dim[t.block])
      throw InvalidArgument("linear term coefficient dimension mismatch on block " +
                            std::to_string(t.block));
    cst += herm_inner(t.coef, cp.pin_base[t.block]);
    for (size_t k = 0; k < cp.block_dofs[t.block].size(); ++k) {
      const int gd = cp.block_dofs[t.block][k];
      coef(gd) += trace_coef(t.coef, cp.dofs[gd]);
    }
  }
}

}  // namespace

Compiled compile(const ConicProblem& p, const SolverOptions& opt) {
  Compiled cp;
  cp.n_blocks = static_cast<int>(p.blocks.size());
  if (cp.n_blocks == 0) throw InvalidArgument("conic problem has no variable blocks");
  cp.block_dim.resize(cp.n_blocks);
  cp.block_dofs.resize(cp.n_blocks);
  cp.pin_base.resize(cp.n_blocks);
  cp.scalar_dof.assign(cp.n_blocks, -1);

  // pins, grouped per block
  std::vector<std::set<std::pair<int, int>>> pinned(cp.n_blocks);
  for (int b = 0; b < cp.n_blocks; ++b) {
    const auto& blk = p.blocks[b];
    if (blk.dim < 1) throw InvalidArgument("block '" + blk.name + "' has dim < 1");
    if (blk.dim > opt.max_block_dim)
      throw CapacityError("block '" + blk.name + "' dim " + std::to_string(blk.dim) +
                          " exceeds max_block_dim " + std::to_string(opt.max_block_dim) +
                          "; raise SolverOptions::max_block_dim");
    cp.block_dim[b] = blk.dim;
    cp.pin_base[b] = MatrixXcd::Zero(blk.dim, blk.dim);
  }
  for (const auto& pin : p.pins) {
    if (pin.block < 0 || pin.block >= cp.n_blocks) throw InvalidArgument("pin: bad block index");
    const int d = cp.block_dim[pin.block];
    if (pin.i < 0 || pin.j >= d || pin.i > pin.j) throw InvalidArgument("pin: bad entry index");
    if (d == 1) throw InvalidArgument("pin: scalar blocks cannot be pinned (use constants)");
    if (pin.i == pin.j && std::abs(pin.value.imag()) > 0.0)
      throw InvalidArgument("pin: diagonal pin must be real");
    if (!pinned[pin.block].insert({pin.i, pin.j}).second)
      throw InvalidArgument("pin: duplicate pin on block " + std::to_string(pin.block));
    cp.pin_base[pin.block](pin.i, pin.j) = pin.value;
    cp.pin_base[pin.block](pin.j, pin.i) = std::conj(pin.value);
  }

  // dof enumeration
  for (int b = 0; b < cp.n_blocks; ++b) {
    const int d = cp.block_dim[b];
    for (int i = 0; i < d; ++i) {
      for (int j = i; j < d; ++j) {
        if (pinned[b].count({i, j})) continue;
        if (i == j) {
          Dof dof;
          dof.block = b;
          dof.i = dof.j = i;
          dof.kind = Dof::kDiag;
          dof.n_atoms = 1;
          dof.atoms[0] = {i, i, cplx(1.0, 0.0)};
          cp.block_dofs[b].push_back(cp.n);
          cp.dofs.push_back(dof);
          ++cp.n;
        } else {
          Dof re;
          re.block = b;
          re.i = i;
          re.j = j;
          re.kind = Dof::kRe;
          re.n_atoms = 2;
          re.atoms[0] = {i, j, cplx(1.0, 0.0)};
          re.atoms[1] = {j, i, cplx(1.0, 0.0)};
          cp.block_dofs[b].push_back(cp.n);
          cp.dofs.push_back(re);
          ++cp.n;
          Dof im;
          im.block = b;
          im.i = i;
          im.j = j;
          im.kind = Dof::kIm;
          im.n_atoms = 2;
          im.atoms[0] = {i, j, cplx(0.0, 1.0)};
          im.atoms[1] = {j, i, cplx(0.0, -1.0)};
          cp.block_dofs[b].push_back(cp.n);
          cp.dofs.push_back(im);
          ++cp.n;
        }
      }
    }
    if (d == 1) cp.scalar_dof[b] = cp.block_dofs[b].empty() ? -1 : cp.block_dofs[b][0];
  }

  auto block_support = [&](int b, std::set<int>& sup) {
    for (int gd : cp.block_dofs[b]) sup.insert(gd);
  };

  // block cones
  for (int b = 0; b < cp.n_blocks; ++b) {
    if (!p.blocks[b].psd) {
      if (cp.block_dim[b] > 1)
        throw InvalidArgument("block '" + p.blocks[b].name + "': matrix blocks must be psd");
      continue;
    }
    Cone cn;
    cn.dim = cp.block_dim[b];
    cn.name = "psd:" + p.blocks[b].name;
    cn.is_block_cone = true;
    cn.block = b;
    std::set<int> sup;
    block_support(b, sup);
    cn.support.assign(sup.begin(), sup.end());
    cp.cones.push_back(std::move(cn));
  }

  auto make_trace = [&](int block, const MatrixXcd& a, const MatrixXcd& t) {
    Cone::Trace tr;
    tr.block = block;
    tr.a = a;
    tr.t = t;
    tr.tau0 = herm_inner(a, cp.pin_base[block]);
    tr.tau.resize(static_cast<Eigen::Index>(cp.block_dofs[block].size()));
    for (size_t k = 0; k < cp.block_dofs[block].size(); ++k)
      tr.tau(static_cast<Eigen::Index>(k)) = trace_coef(a, cp.dofs[cp.block_dofs[block][k]]);
    return tr;
  };

  // explicit LMIs
  for (const auto& lmi : p.lmis) {
    if (lmi.dim < 1) throw InvalidArgument("lmi '" + lmi.name + "': dim < 1");
    if (lmi.dim > opt.max_block_dim)
      throw CapacityError("lmi '" + lmi.name + "' dim " + std::to_string(lmi.dim) +
                          " exceeds max_block_dim " + std::to_string(opt.max_block_dim) +
                          "; raise SolverOptions::max_block_dim");
    Cone cn;
    cn.dim = lmi.dim;
    cn.name = lmi.name.empty() ? "lmi" : lmi.name;
    if (lmi.f0.size() > 0) {
      check_hermitian(lmi.f0, "lmi '" + cn.name + "' f0");
      if (lmi.f0.rows() != lmi.dim) throw InvalidArgument("lmi '" + cn.name + "': f0 dim mismatch");
      cn.f0 = 0.5 * (lmi.f0 + lmi.f0.adjoint());
    } else {
      cn.f0 = MatrixXcd::Zero(lmi.dim, lmi.dim);
    }
    std::set<int> sup;
    for (const auto& s : lmi.sandwiches) {
      if (s.block < 0 || s.block >= cp.n_blocks) throw InvalidArgument("lmi sandwich: bad block");
      if (s.g.rows() != lmi.dim || s.g.cols() != cp.block_dim[s.block])
        throw InvalidArgument("lmi '" + cn.name + "': sandwich G dimension mismatch");
      Cone::Sandwich cs;
      cs.block = s.block;
      cs.g = s.g;
      cs.sign = s.sign;
      if (s.mask.size() > 0) {
        check_hermitian(s.mask, "lmi sandwich mask");
        if (s.mask.rows() != cp.block_dim[s.block])
          throw InvalidArgument("lmi '" + cn.name + "': mask dimension mismatch");
        cs.mask = s.mask;
      }
      cn.sandwiches.push_back(std::move(cs));
      block_support(s.block, sup);
    }
    for (const auto& sc : lmi.scalar_terms) {
      if (sc.block < 0 || sc.block >= cp.n_blocks || cp.block_dim[sc.block] != 1)
        throw InvalidArgument("lmi '" + cn.name + "': scalar term must reference a 1x1 block");
      check_hermitian(sc.d, "lmi scalar coefficient");
      if (sc.d.rows() != lmi.dim) throw InvalidArgument("lmi '" + cn.name + "': scalar D mismatch");
      cn.scalars.push_back({cp.scalar_dof[sc.block], 0.5 * (sc.d + sc.d.adjoint())});
      sup.insert(cp.scalar_dof[sc.block]);
    }
    for (const auto& tt : lmi.trace_terms) {
      if (tt.block < 0 || tt.block >= cp.n_blocks) throw InvalidArgument("lmi trace: bad block");
      check_hermitian(tt.a, "lmi trace A");
      check_hermitian(tt.t, "lmi trace T");
      if (tt.a.rows() != cp.block_dim[tt.block] || tt.t.rows() != lmi.dim)
        throw InvalidArgument("lmi '" + cn.name + "': trace term dimension mismatch");
      cn.traces.push_back(make_trace(tt.block, 0.5 * (tt.a + tt.a.adjoint()),
                                     0.5 * (tt.t + tt.t.adjoint())));
      block_support(tt.block, sup);
    }
    cn.support.assign(sup.begin(), sup.end());
    cp.cones.push_back(std::move(cn));
  }

  // inequalities -> 1x1 cones: rhs - lhs >= 0, equilibrated so the largest
  // entry of each row is O(1) (mixing O(1) rows with loose caps in raw units
  // otherwise wrecks the interior-point initialization)
  for (const auto& iq : p.inequalities) {
    Cone cn;
    cn.dim = 1;
    cn.name = iq.name.empty() ? "ineq" : iq.name;
    VectorXd coef;
    double cst;
    linexpr_coef(cp, iq.lhs, coef, cst);
    double rho = std::abs(iq.rhs - cst);
    for (const auto& t : iq.lhs.terms)
      rho = std::max(rho, t.coef.cwiseAbs().maxCoeff());
    rho = std::max(rho, 1.0);  // only ever scale down
    cn.f0 = MatrixXcd::Constant(1, 1, cplx((iq.rhs - cst) / rho, 0.0));
    std::set<int> sup;
    for (const auto& t : iq.lhs.terms) {
      if (cp.block_dim[t.block] == 1) {
        cn.scalars.push_back(
            {cp.scalar_dof[t.block], MatrixXcd::Constant(1, 1, -t.coef(0, 0).real() / rho)});
        sup.insert(cp.scalar_dof[t.block]);
      } else {
        Cone::Trace tr = make_trace(t.block, 0.5 * (t.coef + t.coef.adjoint()) / rho,
                                    -MatrixXcd::Identity(1, 1));
        tr.tau0 = 0.0;  // constant already folded into f0
        cn.traces.push_back(std::move(tr));
        for (int gd : cp.block_dofs[t.block]) sup.insert(gd);
      }
    }
    cn.support.assign(sup.begin(), sup.end());
    cp.cones.push_back(std::move(cn));
  }

  // equalities, with the same per-row equilibration
  const int m = static_cast<int>(p.equalities.size());
  cp.A.setZero(m, cp.n);
  cp.b.setZero(m);
  for (int r = 0; r < m; ++r) {
    VectorXd coef;
    double cst;
    linexpr_coef(cp, p.equalities[r].lhs, coef, cst);
    const double rho = std::max({coef.cwiseAbs().maxCoeff(),
                                 std::abs(p.equalities[r].rhs - cst), 1.0});
    cp.A.row(r) = coef.transpose() / rho;
    cp.b(r) = (p.equalities[r].rhs - cst) / rho;
  }

  // objective (internal: minimize)
  VectorXd ocoef;
  double ocst;
  linexpr_coef(cp, p.objective, ocoef, ocst);
  cp.obj_sign = p.maximize ? -1.0 : 1.0;
  cp.c = cp.obj_sign * ocoef;
  cp.c0 = cp.obj_sign * ocst;

  if (cp.n == 0) throw InvalidArgument("conic problem has no free degrees of freedom");
  return cp;
}

void accumulate_schur_dense(const Compiled& cp, int j, const MatrixXcd& w, MatrixXd& m) {
  const Cone& cn = cp.cones[j];

  // Atom lists per participating "matrix-valued" term instance. For a block
  // cone there is a single implicit sandwich with G = I, no mask.
  struct TermAtoms {
    double sign;
    const MatrixXcd* g;  // nullptr => identity
    const MatrixXcd* mask;
    int block;
  };
  std::vector<TermAtoms> mats;
  if (cn.is_block_cone) {
    mats.push_back({1.0, nullptr, nullptr, cn.block});
  } else {
    for (const auto& s : cn.sandwiches)
      mats.push_back({s.sign, &s.g, s.mask.size() > 0 ? &s.mask : nullptr, s.block});
  }

  // Collapses P_ab = Ga^H w Gb for each ordered pair of matrix terms.
  const int nm = static_cast<int>(mats.size());
  std::vector<std::vector<MatrixXcd>> collapse(nm, std::vector<MatrixXcd>(nm));
  for (int a = 0; a < nm; ++a) {
    for (int bq = 0; bq < nm; ++bq) {
      const MatrixXcd& left = mats[a].g ? *mats[a].g : MatrixXcd();
      const MatrixXcd& right = mats[bq].g ? *mats[bq].g : MatrixXcd();
      if (mats[a].g && mats[bq].g)
        collapse[a][bq] = left.adjoint() * w * right;
      else if (mats[a].g)
        collapse[a][bq] = left.adjoint() * w;
      else if (mats[bq].g)
        collapse[a][bq] = w * right;
      else
        collapse[a][bq] = w;
    }
  }

  auto masked = [](const TermAtoms& t, const DofAtom& a) {
    return t.mask ? a.c * (*t.mask)(a.p, a.q) : a.c;
  };

  // matrix-term x matrix-term
  for (int a = 0; a < nm; ++a) {
    const auto& dofs_a = cp.block_dofs[mats[a].block];
    for (int bq = a; bq < nm; ++bq) {
      const auto& dofs_b = cp.block_dofs[mats[bq].block];
      const MatrixXcd& P = collapse[a][bq];   // Ga^H w Gb
      const MatrixXcd& Q = collapse[bq][a];   // Gb^H w Ga
      const double sgn = mats[a].sign * mats[bq].sign;
      const bool same_term = (a == bq);
      for (size_t ka = 0; ka < dofs_a.size(); ++ka) {
        const int gk = dofs_a[ka];
        const Dof& dk = cp.dofs[gk];
        const size_t lb0 = same_term ? ka : 0;
        for (size_t lb = lb0; lb < dofs_b.size(); ++lb) {
          const int gl = dofs_b[lb];
          const Dof& dl = cp.dofs[gl];
          cplx acc{0.0, 0.0};
          for (int t = 0; t < dk.n_atoms; ++t) {
            const DofAtom& at = dk.atoms[t];
            const cplx ca = masked(mats[a], at);
            for (int u = 0; u < dl.n_atoms; ++u) {
              const DofAtom& au = dl.atoms[u];
              const cplx cb = masked(mats[bq], au);
              acc += ca * cb * P(at.q, au.p) * Q(au.q, at.p);
            }
          }
          const double v = sgn * acc.real();
          if (same_term) {
            // one F-term: contribution v at (k,l) and (l,k), diagonal once
            m(gk, gl) += v;
            if (gk != gl) m(gl, gk) += v;
          } else {
            // cross pair of distinct terms visited once: symmetric add,
            // which correctly doubles when gk == gl
            m(gk, gl) += v;
            m(gl, gk) += v;
          }
        }
      }
    }
  }

  // "vector" terms: scalars and traces, with each other and with matrix terms
  struct VecTerm {
    const MatrixXcd* d;      // the LMI-side matrix (D or T)
    const VectorXd* tau;     // nullptr for scalar terms
    int block;               // block of tau (trace) or -1
    int dof;                 // dof index for scalar terms or -1
  };
  std::vector<VecTerm> vecs;
  for (const auto& sc : cn.scalars) vecs.push_back({&sc.d, nullptr, -1, sc.dof});
  for (const auto& tr : cn.traces) vecs.push_back({&tr.t, &tr.tau, tr.block, -1});

  const int nv = static_cast<int>(vecs.size());
  // vec x matrix-term
  for (int v = 0; v < nv; ++v) {
    const MatrixXcd wdw = w * (*vecs[v].d) * w;  // for R = G^H (w D w) G
    for (int a = 0; a < nm; ++a) {
      const MatrixXcd r = mats[a].g ? MatrixXcd((*mats[a].g).adjoint() * wdw * (*mats[a].g))
                                    : wdw;
      const auto& dofs_a = cp.block_dofs[mats[a].block];
      for (size_t ka = 0; ka < dofs_a.size(); ++ka) {
        const int gk = dofs_a[ka];
        const Dof& dk = cp.dofs[gk];
        cplx acc{0.0, 0.0};
        for (int t = 0; t < dk.n_atoms; ++t) {
          const DofAtom& at = dk.atoms[t];
          acc += masked(mats[a], at) * r(at.q, at.p);
        }
        const double base = mats[a].sign * acc.real();
        // cross pair (vec, matrix-term): symmetric add, doubling when indices
        // coincide (trace and sandwich can share a block)
        if (vecs[v].tau) {
          const auto& dofs_v = cp.block_dofs[vecs[v].block];
          for (size_t kv = 0; kv < dofs_v.size(); ++kv) {
            const double val = base * (*vecs[v].tau)(static_cast<Eigen::Index>(kv));
            const int gv = dofs_v[kv];
            m(gk, gv) += val;
            m(gv, gk) += val;
          }
        } else {
          const int gv = vecs[v].dof;
          m(gk, gv) += base;
          m(gv, gk) += base;
        }
      }
    }
  }

  // vec x vec
  for (int v = 0; v < nv; ++v) {
    for (int u = v; u < nv; ++u) {
      const double kappa =
          (w * (*vecs[v].d) * w * (*vecs[u].d)).trace().real();
      const bool same = (u == v);
      // cross add: doubles on coinciding indices; same-term add: diagonal once
      auto add_cross = [&](int gk, int gl, double val) {
        m(gk, gl) += val;
        m(gl, gk) += val;
      };
      if (!vecs[v].tau && !vecs[u].tau) {
        if (same)
          m(vecs[v].dof, vecs[v].dof) += kappa;
        else
          add_cross(vecs[v].dof, vecs[u].dof, kappa);
      } else if (vecs[v].tau && !vecs[u].tau) {
        const auto& dv = cp.block_dofs[vecs[v].block];
        for (size_t k = 0; k < dv.size(); ++k)
          add_cross(dv[k], vecs[u].dof, kappa * (*vecs[v].tau)(static_cast<Eigen::Index>(k)));
      } else if (!vecs[v].tau && vecs[u].tau) {
        const auto& du = cp.block_dofs[vecs[u].block];
        for (size_t k = 0; k < du.size(); ++k)
          add_cross(vecs[v].dof, du[k], kappa * (*vecs[u].tau)(static_cast<Eigen::Index>(k)));
      } else {
        const auto& dv = cp.block_dofs[vecs[v].block];
        const auto& du = cp.block_dofs[vecs[u].block];
        for (size_t k = 0; k < dv.size(); ++k) {
          const double tv = (*vecs[v].tau)(static_cast<Eigen::Index>(k));
          if (tv == 0.0) continue;
          for (size_t l = same ? k : 0; l < du.size(); ++l) {
            const double val = kappa * tv * (*vecs[u].tau)(static_cast<Eigen::Index>(l));
            if (same) {
              m(dv[k], du[l]) += val;
              if (dv[k] != du[l]) m(du[l], dv[k]) += val;
            } else {
              add_cross(dv[k], du[l], val);
            }
          }
        }
      }
    }
  }
}

}  // namespace omnibeam::internal
