#include "omnibeam/hermitian.hpp"

#include <Eigen/Eigenvalues>

namespace omnibeam {

HermitianMatrix::HermitianMatrix(const MatrixXcd& m, double tol) {
  if (m.rows() != m.cols())
    throw InvalidArgument("HermitianMatrix: matrix must be square, got " +
                          std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  const double asym = (m - m.adjoint()).cwiseAbs().maxCoeff();
  if (asym > tol * scale)
    throw InvalidArgument("HermitianMatrix: input is not Hermitian (asymmetry " +
                          std::to_string(asym) + ", scale " + std::to_string(scale) + ")");
  m_ = 0.5 * (m + m.adjoint());
  for (int i = 0; i < m_.rows(); ++i) m_(i, i) = cplx(m_(i, i).real(), 0.0);
}

double herm_inner(const MatrixXcd& a, const MatrixXcd& b) {
  return (a.cwiseProduct(b.transpose())).sum().real();
}

MatrixXd hermitian_to_real_embedding(const MatrixXcd& h) {
  const Eigen::Index n = h.rows();
  if (h.cols() != n) throw InvalidArgument("hermitian_to_real_embedding: square input required");
  MatrixXd t(2 * n, 2 * n);
  t.topLeftCorner(n, n) = h.real();
  t.topRightCorner(n, n) = -h.imag();
  t.bottomLeftCorner(n, n) = h.imag();
  t.bottomRightCorner(n, n) = h.real();
  return t;
}

RankOneResult principal_rank_one(const MatrixXcd& x) {
  if (x.rows() != x.cols()) throw InvalidArgument("principal_rank_one: square input required");
  Eigen::SelfAdjointEigenSolver<MatrixXcd> es(0.5 * (x + x.adjoint()));
  if (es.info() != Eigen::Success)
    throw OmnibeamError("principal_rank_one: eigendecomposition failed");
  const int n = static_cast<int>(x.rows());
  RankOneResult r;
  r.lambda1 = es.eigenvalues()(n - 1);
  r.lambda2 = (n >= 2) ? es.eigenvalues()(n - 2) : 0.0;
  r.v1 = es.eigenvectors().col(n - 1);
  if (r.lambda2 > 0.0)
    r.ratio = r.lambda1 / r.lambda2;
  else
    r.ratio = std::numeric_limits<double>::infinity();
  return r;
}

}  // namespace omnibeam
