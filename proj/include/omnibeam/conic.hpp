#pragma once

#include <optional>
#include <string>
#include <vector>

#include "omnibeam/types.hpp"

namespace omnibeam {

// Linear functional of the decision variables:
//   sum_b Re tr(coef_b X_b) + constant
// where X_b is the value of block b. For 1x1 (scalar) blocks the coefficient
// is a real 1x1 matrix.
struct LinExpr {
  struct Term {
    int block = -1;
    MatrixXcd coef;  // Hermitian, dim(block) x dim(block)
  };
  std::vector<Term> terms;
  double constant = 0.0;

  LinExpr& add(int block, MatrixXcd coef) {
    terms.push_back({block, std::move(coef)});
    return *this;
  }
  LinExpr& add_scalar(int block, double c) {
    terms.push_back({block, MatrixXcd::Constant(1, 1, cplx(c, 0.0))});
    return *this;
  }
};

// Semidefinite program over Hermitian matrix blocks.
//
// Variables are Hermitian blocks (dim >= 2, always constrained PSD) and
// scalar blocks (dim == 1, PSD means x >= 0, otherwise free). Individual
// entries of matrix blocks can be pinned to constants; pins are eliminated
// at compile time rather than enforced through multipliers.
//
// Besides the implicit block cones, the problem can carry affine linear
// matrix inequality constraints assembled from structured terms:
//   F(x) = f0 + sum sandwiches sign * G (mask o X_b) G^H
//             + sum scalar terms x_s * D
//             + sum trace terms Re tr(A X_b) * T           >= 0 (PSD)
// ("o" is the entrywise product; an empty mask means no mask.)
struct ConicProblem {
  struct Block {
    std::string name;
    int dim = 1;
    bool psd = true;
  };

  struct Pin {
    int block;
    int i, j;  // i <= j
    cplx value;
  };

  struct EqCon {
    LinExpr lhs;
    double rhs = 0.0;
    std::string name;
  };

  struct IneqCon {  // lhs <= rhs
    LinExpr lhs;
    double rhs = 0.0;
    std::string name;
  };

  struct Lmi {
    struct Sandwich {
      int block = -1;
      MatrixXcd g;     // dim(lmi) x dim(block)
      MatrixXcd mask;  // empty or dim(block) x dim(block)
      double sign = 1.0;
    };
    struct ScalarTerm {
      int block = -1;  // must be a 1x1 block
      MatrixXcd d;     // Hermitian, dim(lmi) x dim(lmi)
    };
    struct TraceTerm {
      int block = -1;
      MatrixXcd a;  // Hermitian, dim(block) x dim(block)
      MatrixXcd t;  // Hermitian, dim(lmi) x dim(lmi)
    };

    int dim = 0;
    std::string name;
    MatrixXcd f0;  // empty means zero
    std::vector<Sandwich> sandwiches;
    std::vector<ScalarTerm> scalar_terms;
    std::vector<TraceTerm> trace_terms;
  };

  std::vector<Block> blocks;
  std::vector<Pin> pins;
  std::vector<EqCon> equalities;
  std::vector<IneqCon> inequalities;
  std::vector<Lmi> lmis;
  LinExpr objective;
  bool maximize = true;

  int add_block(const std::string& name, int dim, bool psd = true) {
    blocks.push_back({name, dim, psd});
    return static_cast<int>(blocks.size()) - 1;
  }
  void pin(int block, int i, int j, cplx value) {
    if (i > j) {
      std::swap(i, j);
      value = std::conj(value);
    }
    pins.push_back({block, i, j, value});
  }
};

enum class SolveStatus { kOptimal, kInfeasible, kMaxIterations };

struct SolverOptions {
  double feas_tol = 1e-7;
  double gap_tol = 1e-6;
  int max_iters = 200;
  // Any single cone above this dimension raises CapacityError. Callers that
  // knowingly build large cones must raise the cap.
  int max_block_dim = 64;
  enum class Backend { kAuto, kDense, kStructured };
  Backend backend = Backend::kAuto;
  bool verbose = false;
};

struct SolverResult {
  SolveStatus status = SolveStatus::kMaxIterations;
  double objective = 0.0;  // in the problem's own sense (max or min)
  std::vector<MatrixXcd> block_values;
  int iterations = 0;
  double gap = 0.0;           // relative duality gap at exit
  double primal_infeas = 0.0;
  double dual_infeas = 0.0;
  // When status == kInfeasible: strength of the separating certificate
  // (positive dual objective against near-zero adjoint residual).
  double infeas_certificate = 0.0;
  std::string backend_used;
};

// Primal-dual interior-point solve (HKM direction, Mehrotra corrector),
// operating on complex Hermitian cones natively. Deterministic.
SolverResult solve_conic(const ConicProblem& problem, const SolverOptions& options = {});

}  // namespace omnibeam
