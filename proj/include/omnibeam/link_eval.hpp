#pragma once

#include "omnibeam/channel.hpp"
#include "omnibeam/precoder.hpp"
#include "omnibeam/surface.hpp"

namespace omnibeam {

// Surface gain vectors split by role (desired signal vs jamming) and by user
// side. Routing is fixed by geometry: the BS illuminates the surface from the
// R half-space and the jammer from the T half-space, so the desired signal
// reaches R users by reflection and T users by refraction, while jamming does
// the opposite (refraction to R users, reflection to T users).
struct SurfaceGains {
  VectorXcd des_r;  // applied to the BS cascade of R-side users
  VectorXcd des_t;  // applied to the BS cascade of T-side users
  VectorXcd jam_r;  // applied to the jammer cascade of R-side users
  VectorXcd jam_t;  // applied to the jammer cascade of T-side users
};

// Gains of the actual surface state (codebook amplitudes).
SurfaceGains surface_gains(const SurfaceResponse& sr);

// Gains with per-role overrides of the two mechanism amplitudes, at the same
// phases. Single-function baselines are wired this way: a reflect-only panel
// serving the signal keeps des_refl = 1 and zeroes the rest; one deployed
// against the jammer keeps jam_refl = 1; no surface at all zeroes everything.
SurfaceGains surface_gains(const PhaseConfig& cfg, const RoleAmps& amps);

// Ground-truth per-user link quality for one configured downlink.
struct LinkReport {
  VectorXd sinr;          // linear
  VectorXd rate;          // bits/s/Hz, log2(1 + sinr)
  VectorXd jam_power;     // realized jamming power, watts
  VectorXd desired;       // |h_k^H v_k|^2, watts
  VectorXd interference;  // residual inter-user power, watts
  double noise_w = 0.0;

  int n_users() const { return static_cast<int>(sinr.size()); }
};

// Matched-filter jamming beam toward the user nearest to the jammer,
// ||v_J||^2 = p_j. Built from the jammer's own (estimated) channel knowledge.
VectorXcd jammer_beamformer(const std::vector<VectorXcd>& jam_direct_est,
                            const Eigen::Matrix3Xd& users, const Eigen::Vector3d& jammer_pos,
                            double p_j);

// |(h_direct + H_cascade^H g_side)^H v_J|^2 with the jamming-side gain vector.
double received_jamming_power(const ChannelSet& cs, const std::vector<Side>& side,
                              const SurfaceGains& g, const VectorXcd& v_j, int k);

// Desired power over residual interference + realized jamming + noise.
// block_t_direct drops the direct BS link of T-side users (off by default).
double user_sinr(const ChannelSet& cs, const std::vector<Side>& side,
                 const SurfaceGains& g, const Precoder& pre, const VectorXcd& v_j,
                 double noise_w, int k, bool block_t_direct = false);

LinkReport evaluate_link(const ChannelSet& cs, const std::vector<Side>& side,
                         const SurfaceGains& g, const Precoder& pre, const VectorXcd& v_j,
                         double noise_w, bool block_t_direct = false);

// Sum of log2(1 + sinr_k) over users.
double sum_rate(const LinkReport& rep);

}  // namespace omnibeam
