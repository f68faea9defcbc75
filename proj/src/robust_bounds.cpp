#include "omnibeam/robust_bounds.hpp"

#include <Eigen/SVD>

namespace omnibeam {

void RobustParams::validate(int n_users) const {
  if (p_jam_est < 0.0) throw InvalidArgument("robust: negative jammer power");
  if (eps_power < 0.0 || eps_power >= 1.0)
    throw InvalidArgument("robust: power error bound must sit in [0, 1)");
  if (tau.size() != n_users || eps_direct.size() != n_users || eps_cascade.size() != n_users)
    throw InvalidArgument("robust: per-user field length mismatch");
  for (int k = 0; k < n_users; ++k) {
    if (tau(k) <= 0.0) throw InvalidArgument("robust: thresholds must be positive");
    if (eps_direct(k) < 0.0 || eps_cascade(k) < 0.0)
      throw InvalidArgument("robust: negative radius");
  }
}

double jamming_upper_bound(const VectorXcd& effective_jam_row, double p_jam_est,
                           double eps_power) {
  if (eps_power < 0.0 || eps_power >= 1.0)
    throw InvalidArgument("jamming_upper_bound: power error bound must sit in [0, 1)");
  return p_jam_est / (1.0 - eps_power) * effective_jam_row.squaredNorm();
}

MatrixXcd lifted_channel(const MatrixXcd& cascade, const VectorXcd& direct, double amp) {
  const int m = static_cast<int>(cascade.rows());
  const int n = static_cast<int>(cascade.cols());
  if (direct.size() != n) throw InvalidArgument("lifted_channel: dimension mismatch");
  MatrixXcd a(n, m + 1);
  a.leftCols(m) = amp * cascade.transpose();
  a.col(m) = direct.conjugate();
  return a;
}

VectorXcd lifted_beam_vector(const MatrixXcd& lifted, const VectorXcd& beam) {
  return (lifted.transpose() * beam).conjugate();
}

double worst_case_jamming(const MatrixXcd& lifted_jam, const VectorXcd& lift,
                          double eps_lump, double p_ceiling) {
  const double norm = (lifted_jam * lift).norm() + eps_lump * lift.norm();
  return p_ceiling * norm * norm;
}

VectorXd robust_norm_targets(const RobustParams& rp, int n_elements) {
  const double ceil = rp.power_ceiling();
  if (ceil <= 0.0) throw InvalidArgument("robust_norm_targets: no jammer power ceiling");
  const double root_dim = std::sqrt(static_cast<double>(n_elements + 1));
  VectorXd theta(rp.tau.size());
  for (int k = 0; k < theta.size(); ++k)
    theta(k) = std::sqrt(rp.tau(k) / ceil) - rp.lumped_radius(k) * root_dim;
  return theta;
}

std::vector<int> infeasible_users(const std::vector<MatrixXcd>& lifted_jam,
                                  const RobustParams& rp) {
  const double ceil = rp.power_ceiling();
  std::vector<int> bad;
  if (ceil <= 0.0) return bad;
  for (int k = 0; k < static_cast<int>(lifted_jam.size()); ++k) {
    const MatrixXcd& a = lifted_jam[k];
    double smin = 0.0;
    if (a.rows() >= a.cols()) {
      Eigen::JacobiSVD<MatrixXcd> svd(a);
      smin = svd.singularValues().minCoeff();
    }
    const double floor_norm =
        (smin + rp.lumped_radius(k)) * std::sqrt(static_cast<double>(a.cols()));
    if (std::sqrt(rp.tau(k) / ceil) < floor_norm) bad.push_back(k);
  }
  return bad;
}

}  // namespace omnibeam
