#pragma once

#include "omnibeam/types.hpp"

namespace omnibeam {

// Hermitian matrix value type. The constructor validates that the input is
// Hermitian up to a scaled tolerance, then symmetrizes exactly so downstream
// code can rely on entry(i,j) == conj(entry(j,i)) and real diagonal.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const MatrixXcd& m, double tol = 1e-12);

  static HermitianMatrix Zero(int n) { return HermitianMatrix(MatrixXcd::Zero(n, n)); }
  static HermitianMatrix Identity(int n) { return HermitianMatrix(MatrixXcd::Identity(n, n)); }

  int dim() const { return static_cast<int>(m_.rows()); }
  const MatrixXcd& mat() const { return m_; }
  cplx operator()(int i, int j) const { return m_(i, j); }

  double trace() const { return m_.real().trace(); }

 private:
  MatrixXcd m_;
};

// <A, B> = Re tr(A B) for Hermitian A, B (real because tr(AB) is real then).
double herm_inner(const MatrixXcd& a, const MatrixXcd& b);

// Real symmetric embedding T(H) = [[Re H, -Im H], [Im H, Re H]].
// Every eigenvalue of H appears twice in T(H); H is PSD iff T(H) is PSD.
MatrixXd hermitian_to_real_embedding(const MatrixXcd& h);

struct RankOneResult {
  double lambda1 = 0.0;          // largest eigenvalue
  double lambda2 = 0.0;          // second largest
  VectorXcd v1;                  // unit eigenvector of lambda1
  double ratio = 0.0;            // lambda1 / max(lambda2, 0) (inf if lambda2 <= 0)
};

// Principal eigenpair of a Hermitian PSD matrix, plus the dominance ratio used
// to decide whether the matrix is numerically rank one.
RankOneResult principal_rank_one(const MatrixXcd& x);

}  // namespace omnibeam
