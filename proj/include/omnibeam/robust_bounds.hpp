#pragma once

#include <cmath>

#include "omnibeam/types.hpp"

namespace omnibeam {

// Worst-case jammer description: estimated transmit power with a relative
// error bound, per-user jamming ceilings, and the CSI error radii the design
// must survive.
struct RobustParams {
  double p_jam_est = 0.0;  // estimated jammer transmit power, watts
  double eps_power = 0.0;  // relative power error bound, in [0, 1)
  VectorXd tau;            // per-user received-jamming thresholds, watts
  VectorXd eps_direct;     // 2-norm radii on the direct jamming channels
  VectorXd eps_cascade;    // Frobenius radii on the cascaded jamming channels

  // Largest transmit power consistent with the estimate.
  double power_ceiling() const { return p_jam_est / (1.0 - eps_power); }

  // Single Frobenius radius covering the lifted perturbation of user k: the
  // lifted matrix stacks amp * cascade (amp <= 1) next to the direct channel,
  // so the two raw balls combine into sqrt(eps_d^2 + eps_J^2).
  double lumped_radius(int k) const {
    return std::hypot(eps_direct(k), eps_cascade(k));
  }

  void validate(int n_users) const;
};

// (p_hat/(1-eps)) * ||row||^2: no jamming beam inside the power ball can push
// more than this through a known effective channel row.
double jamming_upper_bound(const VectorXcd& effective_jam_row, double p_jam_est,
                           double eps_power);

// Lifted channel A = [amp * H^T, conj(h)], size N x (M+1), chosen so that for
// the phase lift q (q[m] = e^{-j phi_m}, q[M] = 1) the received amplitude
// through beam v is exactly conj(A^T v)^H q and the worst-case received
// jamming power over the beam ball is p_ceiling * ||A q||^2.
MatrixXcd lifted_channel(const MatrixXcd& cascade, const VectorXcd& direct, double amp);

// conj(A^T v): rank-one coefficient of the desired-signal power, so that
// |w^H q|^2 = |(h^H + g^H H) v|^2 at the matching lift/gain pair.
VectorXcd lifted_beam_vector(const MatrixXcd& lifted, const VectorXcd& beam);

// Closed-form worst case over the lumped CSI ball and the power ball:
//   p_ceiling * (||A q|| + eps_lump * ||q||)^2.
// Sound for any q; tight when the cascade amplitude is 1.
double worst_case_jamming(const MatrixXcd& lifted_jam, const VectorXcd& lift,
                          double eps_lump, double p_ceiling);

// Per-user norm targets for the robust jamming constraint in trace form:
//   ||A q|| <= theta_k  with  theta_k = sqrt(tau_k / p_ceiling) - eps_lump * sqrt(M+1).
// theta_k <= 0 certifies that user k's threshold is unattainable for any
// unit-modulus phase profile.
VectorXd robust_norm_targets(const RobustParams& rp, int n_elements);

// Users whose thresholds no unit-modulus profile can meet: the received-norm
// floor over the lift sphere is (s_min(A_k) + eps_lump) * sqrt(M+1) with
// s_min = 0 whenever A_k is wide.
std::vector<int> infeasible_users(const std::vector<MatrixXcd>& lifted_jam,
                                  const RobustParams& rp);

}  // namespace omnibeam
