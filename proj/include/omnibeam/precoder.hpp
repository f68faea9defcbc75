#pragma once

#include "omnibeam/types.hpp"

namespace omnibeam {

// BS digital beamformer: interference-nulling directions scaled by a per-user
// power allocation. With h the K x N_b effective downlink matrix,
// directions = h^H (h h^H)^{-1}, so h * directions = I and the received power
// of user k under its own beam equals powers[k] exactly.
struct Precoder {
  MatrixXcd directions;  // N_b x K pseudo-inverse columns
  VectorXd powers;       // received powers p_k >= 0
  MatrixXcd v;           // assembled beamformer, directions * diag(sqrt(powers))

  int n_users() const { return static_cast<int>(v.cols()); }
};

// h: K x N_b, rows are per-user effective channels h_k^H. Throws when h is
// rank deficient (condition number above cond_cap) rather than regularizing.
MatrixXcd zero_forcing(const MatrixXcd& h, double cond_cap = 1e8);

// Maximizes sum_k log2(1 + p_k / ipn_k) subject to sum_k nu_k p_k <= p_total,
// where nu are the diagonal entries of directions^H directions and ipn the
// per-user interference-plus-noise powers. Water level found by bisection to
// 1e-10 relative, then the active set is closed exactly.
VectorXd water_filling(const VectorXd& nu, const VectorXd& interference_plus_noise,
                       double p_total);

Precoder assemble_precoder(const MatrixXcd& directions, const VectorXd& powers);

}  // namespace omnibeam
