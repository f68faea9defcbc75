#include "omnibeam/link_eval.hpp"

#include <cmath>
#include <limits>

namespace omnibeam {

namespace {

VectorXcd role_vector(const VectorXd& phase, double amp) {
  VectorXcd g(phase.size());
  for (int m = 0; m < phase.size(); ++m) g(m) = std::polar(amp, phase(m));
  return g;
}

}  // namespace

SurfaceGains surface_gains(const SurfaceResponse& sr) {
  return SurfaceGains{sr.g_r, sr.g_t, sr.g_t, sr.g_r};
}

SurfaceGains surface_gains(const PhaseConfig& cfg, const RoleAmps& amps) {
  SurfaceGains g;
  g.des_r = role_vector(cfg.phase_r, amps.des_refl);
  g.des_t = role_vector(cfg.phase_t, amps.des_refr);
  g.jam_r = role_vector(cfg.phase_t, amps.jam_refr);  // R users are jammed through refraction
  g.jam_t = role_vector(cfg.phase_r, amps.jam_refl);
  return g;
}

VectorXcd jammer_beamformer(const std::vector<VectorXcd>& jam_direct_est,
                            const Eigen::Matrix3Xd& users, const Eigen::Vector3d& jammer_pos,
                            double p_j) {
  const int k = static_cast<int>(jam_direct_est.size());
  if (k == 0 || users.cols() != k)
    throw InvalidArgument("jammer_beamformer: need one position per user");
  if (p_j <= 0.0) throw InvalidArgument("jammer_beamformer: p_j must be positive");

  int nearest = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    const double d = (users.col(i) - jammer_pos).norm();
    if (d < best) {
      best = d;
      nearest = i;
    }
  }
  const double nrm = jam_direct_est[nearest].norm();
  if (nrm <= 0.0)
    throw InvalidArgument("jammer_beamformer: zero channel to the nearest user");
  return std::sqrt(p_j) / nrm * jam_direct_est[nearest];
}

double received_jamming_power(const ChannelSet& cs, const std::vector<Side>& side,
                              const SurfaceGains& g, const VectorXcd& v_j, int k) {
  const VectorXcd& gj = side[k] == Side::R ? g.jam_r : g.jam_t;
  const VectorXcd heff = effective_channel(cs.jam_direct[k], cs.jam_cascade[k], gj);
  return std::norm(heff.dot(v_j));
}

double user_sinr(const ChannelSet& cs, const std::vector<Side>& side,
                 const SurfaceGains& g, const Precoder& pre, const VectorXcd& v_j,
                 double noise_w, int k, bool block_t_direct) {
  const VectorXcd& gd = side[k] == Side::R ? g.des_r : g.des_t;
  VectorXcd direct = cs.bs_direct[k];
  if (block_t_direct && side[k] == Side::T) direct.setZero();
  const VectorXcd heff = effective_channel(direct, cs.bs_cascade[k], gd);

  const double des = std::norm(heff.dot(pre.v.col(k)));
  double intf = 0.0;
  for (int kp = 0; kp < pre.n_users(); ++kp)
    if (kp != k) intf += std::norm(heff.dot(pre.v.col(kp)));
  const double jam = received_jamming_power(cs, side, g, v_j, k);
  return des / (intf + jam + noise_w);
}

LinkReport evaluate_link(const ChannelSet& cs, const std::vector<Side>& side,
                         const SurfaceGains& g, const Precoder& pre, const VectorXcd& v_j,
                         double noise_w, bool block_t_direct) {
  const int k = cs.n_users();
  if (static_cast<int>(side.size()) != k || pre.n_users() != k)
    throw InvalidArgument("evaluate_link: user count mismatch");
  if (noise_w <= 0.0) throw InvalidArgument("evaluate_link: noise must be positive");

  LinkReport rep;
  rep.noise_w = noise_w;
  rep.sinr.resize(k);
  rep.rate.resize(k);
  rep.jam_power.resize(k);
  rep.desired.resize(k);
  rep.interference.resize(k);
  for (int i = 0; i < k; ++i) {
    const VectorXcd& gd = side[i] == Side::R ? g.des_r : g.des_t;
    VectorXcd direct = cs.bs_direct[i];
    if (block_t_direct && side[i] == Side::T) direct.setZero();
    const VectorXcd heff = effective_channel(direct, cs.bs_cascade[i], gd);

    rep.desired(i) = std::norm(heff.dot(pre.v.col(i)));
    double intf = 0.0;
    for (int kp = 0; kp < k; ++kp)
      if (kp != i) intf += std::norm(heff.dot(pre.v.col(kp)));
    rep.interference(i) = intf;
    rep.jam_power(i) = received_jamming_power(cs, side, g, v_j, i);
    rep.sinr(i) = rep.desired(i) / (intf + rep.jam_power(i) + noise_w);
    rep.rate(i) = std::log2(1.0 + rep.sinr(i));
  }
  return rep;
}

double sum_rate(const LinkReport& rep) {
  double total = 0.0;
  for (int i = 0; i < rep.n_users(); ++i) total += std::log2(1.0 + rep.sinr(i));
  return total;
}

}  // namespace omnibeam
