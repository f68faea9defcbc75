#pragma once

#include "omnibeam/rng.hpp"
#include "omnibeam/types.hpp"

namespace omnibeam {

// Physical layout plus propagation parameters. Positions are 3D points in
// meters, one column per antenna/element/user. The surface lies in the x = 0
// plane; a user's side tag must match the sign of its x coordinate (R: x > 0,
// same half-space as the BS).
struct Geometry {
  Eigen::Matrix3Xd bs;        // N_b BS antenna positions
  Eigen::Matrix3Xd jammer;    // N_j jammer antenna positions
  Eigen::Matrix3Xd elements;  // M surface element positions
  Eigen::Matrix3Xd users;     // K user positions
  std::vector<Side> side;     // per-user side tag

  double wavelength = 0.0107;  // meters
  double alpha = 3.0;          // LoS path-loss exponent
  double alpha_nlos = 3.5;     // NLoS path-loss exponent
  double kappa = 4.0;          // Rician factor
  double gain_tx = 1.0;        // transmit antenna power gain
  double gain_rx = 1.0;        // receive antenna power gain
  double gain_surface = 1.0;   // direction gain product toward the surface
  double gain_direct = 1.0;    // end-to-end direct-link gain

  int n_bs() const { return static_cast<int>(bs.cols()); }
  int n_jam() const { return static_cast<int>(jammer.cols()); }
  int n_elements() const { return static_cast<int>(elements.cols()); }
  int n_users() const { return static_cast<int>(users.cols()); }
};

// Scenario knobs from which a concrete Geometry is sampled. The BS and jammer
// sit on opposite sides of the surface (the surface is deployed between them);
// users are dropped uniformly in a disk around the surface, side tag from the
// sign of their x coordinate.
struct ScenarioParams {
  int n_bs = 8;
  int n_jam = 4;
  int n_elements = 16;
  int users_r = 2;
  int users_t = 2;
  double bs_distance = 100.0;      // meters from the surface, +x side
  double jam_distance = 100.0;     // meters from the surface, -x side
  double user_radius = 50.0;       // user disk radius around the surface
  double user_min_distance = 1.0;  // exclusion radius around the surface
  double element_spacing = 0.005;  // meters
  double antenna_spacing = 0.0;    // meters; 0 means half a wavelength
  double carrier_hz = 28e9;
  double alpha = 3.0;
  double alpha_nlos = 3.5;
  double kappa = 4.0;
  double gain_surface = 1.0;
  double gain_direct = 1.0;
};

Geometry make_geometry(const ScenarioParams& sp, Rng& rng);

// True channels plus bounded-error estimates of the jamming channels.
// One entry per user. Invariants, for every user k:
//   ||jam_direct[k]  - jam_direct_est[k]||_2  <= radius_direct[k]
//   ||jam_cascade[k] - jam_cascade_est[k]||_F <= radius_cascade[k]
struct ChannelSet {
  std::vector<MatrixXcd> bs_cascade;   // M x N_b, BS -> surface -> user
  std::vector<VectorXcd> bs_direct;    // N_b, BS -> user
  std::vector<MatrixXcd> jam_cascade;  // M x N_j
  std::vector<VectorXcd> jam_direct;   // N_j

  std::vector<MatrixXcd> jam_cascade_est;
  std::vector<VectorXcd> jam_direct_est;
  std::vector<double> radius_direct;   // 2-norm ball radius per user
  std::vector<double> radius_cascade;  // Frobenius ball radius per user

  int n_users() const { return static_cast<int>(bs_cascade.size()); }
};

// LoS gain of an antenna -> element -> terminal cascade hop pair:
//   magnitude lambda * sqrt(power_gain) / ((4 pi)^{3/2} d1^alpha d2^alpha),
//   phase -2 pi (d1 + d2) / lambda.
cplx cascaded_los_gain(double d1, double d2, double wavelength, double alpha,
                       double power_gain);

// LoS gain of a direct antenna -> terminal link:
//   magnitude sqrt(power_gain * d^-alpha), phase -2 pi d / lambda.
cplx direct_los_gain(double d, double wavelength, double alpha, double power_gain);

// NLoS path-loss factors: same closed form as the corresponding LoS magnitude
// with exponent alpha_nlos and unit gains.
double cascaded_nlos_pathloss(double d1, double d2, double wavelength, double alpha_nlos);
double direct_nlos_pathloss(double d, double alpha_nlos);

// pathloss * h, h ~ CN(0, 1).
cplx nlos_gain(double pathloss, Rng& rng);

// Draws all four channel families. Every entry mixes the deterministic LoS
// term with a scattered term as sqrt(kappa/(1+kappa)) LoS + sqrt(1/(1+kappa)) NLoS.
// Estimates are initialized to the truth with zero radii.
ChannelSet sample_channel_set(const Geometry& g, Rng& rng);

// Perturbs the true jamming channels into estimates with normalized error
// levels zeta (estimate = truth - delta), then records radii measured against
// the estimate: radius = zeta * ||estimate||. Draws are resampled until the
// ball bound holds against the recomputed radius.
void apply_csi_uncertainty(ChannelSet& cs, double zeta_d, double zeta_j, Rng& rng);

}  // namespace omnibeam
