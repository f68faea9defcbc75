#pragma once

// Internal representation shared by the conic compiler and solver backends.
// Not installed; include only from src/.

#include <array>
#include <memory>
#include <vector>

#include "omnibeam/conic.hpp"
#include "omnibeam/hermitian.hpp"

namespace omnibeam::internal {

// One real degree of freedom of a Hermitian block, written as a sum of at most
// two elementary atoms c * e_p e_q^H so that traces against collapsed matrices
// cost O(1).
struct DofAtom {
  int p = 0, q = 0;
  cplx c{0.0, 0.0};
};

struct Dof {
  int block = -1;
  int i = 0, j = 0;
  enum Kind { kDiag, kRe, kIm } kind = kDiag;
  int n_atoms = 0;
  std::array<DofAtom, 2> atoms;
};

// Compiled cone: either the PSD cone of a matrix/scalar block (identity map on
// its free dofs) or an affine LMI assembled from structured terms. Inequality
// constraints are compiled to 1x1 LMI cones.
struct Cone {
  int dim = 0;
  std::string name;
  bool is_block_cone = false;
  int block = -1;  // for block cones

  MatrixXcd f0;  // affine constant WITHOUT pin contributions (pins enter via X_b)

  struct Sandwich {
    int block = -1;
    MatrixXcd g;
    MatrixXcd mask;  // empty if none
    double sign = 1.0;
  };
  struct Scalar {
    int dof = -1;  // global dof index of the 1x1 block
    MatrixXcd d;
  };
  struct Trace {
    int block = -1;
    MatrixXcd a;
    MatrixXcd t;
    VectorXd tau;  // coefficient per free dof of `block`: Re tr(a B_dof)
    double tau0 = 0.0;  // Re tr(a pin_base) (constant part)
  };
  std::vector<Sandwich> sandwiches;
  std::vector<Scalar> scalars;
  std::vector<Trace> traces;

  // union of global dofs this cone actually couples (for assembly loops);
  // excludes dofs that appear only through `traces` when used by the
  // structured backend, but here it is the full support.
  std::vector<int> support;
};

struct Compiled {
  int n = 0;  // number of scalar dofs
  std::vector<Dof> dofs;
  int n_blocks = 0;
  std::vector<int> block_dim;
  std::vector<std::vector<int>> block_dofs;  // block -> global dof indices
  std::vector<MatrixXcd> pin_base;           // block -> pinned part (Hermitian)
  std::vector<int> scalar_dof;               // block -> dof index if dim==1 else -1
  std::vector<Cone> cones;

  MatrixXd A;  // equality lhs (m x n)
  VectorXd b;  // equality rhs
  VectorXd c;  // minimize c^T x + c0 (already sign-flipped for maximize)
  double c0 = 0.0;
  double obj_sign = 1.0;  // multiply internal min-objective by this to report

  // Evaluate block value X_b from dof vector (pins included unless raw).
  MatrixXcd block_value(int b, const VectorXd& x, bool include_pins = true) const;
  // Affine cone value G_j(x); with include_const=false gives the linear map
  // applied to x (used for direction updates).
  MatrixXcd cone_value(int j, const VectorXd& x, bool include_const = true) const;
  // out_i += factor * <F_{j,i}, w> over the cone's dofs. w Hermitian.
  void cone_adjoint(int j, const MatrixXcd& w, double factor, VectorXd& out) const;
};

Compiled compile(const ConicProblem& p, const SolverOptions& opt);

// Dense Schur-complement entries for cone j with metric w (NT: w = Winv):
// adds  Re tr(F_{j,k} w F_{j,l} w)  into m for all dof pairs of the cone.
void accumulate_schur_dense(const Compiled& cp, int j, const MatrixXcd& w, MatrixXd& m);

// KKT backend: factorizes the Schur system for the current NT metrics and
// solves  M dx - A^T dlam = h,  A dx = r_eq.
class KktBackend {
 public:
  virtual ~KktBackend() = default;
  virtual void factorize(const std::vector<MatrixXcd>& winv) = 0;
  virtual void solve(const VectorXd& h, const VectorXd& r_eq, VectorXd& dx,
                     VectorXd& dlam) = 0;
  virtual const char* name() const = 0;
};

// Rewrites pins, inequality constraints, and affine LMIs into pure standard
// form: PSD blocks plus linear equality rows. Slack blocks are appended after
// the original blocks, so original block indices are preserved.
ConicProblem standardize(const ConicProblem& p);

// Cost heuristic for the structured route: worthwhile when the problem has a
// big block and standardization produces fewer equality rows than the dense
// backend has dofs. Requires every block to be PSD (free dofs would make the
// block-diagonal dof system singular).
bool standard_form_profitable(const ConicProblem& p);

std::unique_ptr<KktBackend> make_dense_kkt(const Compiled& cp);
// Requires pure standard form: every cone a block cone, every block PSD, no
// pinned entries. Solves the dof system per block by congruence in the
// metric's eigenbasis and eliminates the equality border through a small
// multiplier Schur complement.
std::unique_ptr<KktBackend> make_kron_kkt(const Compiled& cp);

SolverResult solve_compiled(const Compiled& cp, const SolverOptions& opt, bool use_kron);

}  // namespace omnibeam::internal
