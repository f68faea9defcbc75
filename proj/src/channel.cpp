#include "omnibeam/channel.hpp"

#include <cmath>

namespace omnibeam {

namespace {

constexpr double kFourPiPow32 = 44.546623974653665;  // (4 pi)^{3/2}

double check_distance(double d, const char* what) {
  if (!(d > 0.0)) throw InvalidArgument(std::string("channel: nonpositive distance in ") + what);
  return d;
}

}  // namespace

Geometry make_geometry(const ScenarioParams& sp, Rng& rng) {
  if (sp.n_bs < 1 || sp.n_jam < 1 || sp.n_elements < 1 || sp.users_r + sp.users_t < 1)
    throw InvalidArgument("geometry: all counts must be positive");
  if (!(sp.carrier_hz > 0.0) || !(sp.kappa >= 0.0))
    throw InvalidArgument("geometry: carrier and Rician factor must be valid");

  Geometry g;
  g.wavelength = 299792458.0 / sp.carrier_hz;
  g.alpha = sp.alpha;
  g.alpha_nlos = sp.alpha_nlos;
  g.kappa = sp.kappa;
  g.gain_surface = sp.gain_surface;
  g.gain_direct = sp.gain_direct;

  const double da = sp.antenna_spacing > 0.0 ? sp.antenna_spacing : 0.5 * g.wavelength;

  // Surface: near-square grid in the x = 0 plane centered at the origin.
  int rows = static_cast<int>(std::floor(std::sqrt(static_cast<double>(sp.n_elements))));
  while (rows > 1 && sp.n_elements % rows != 0) --rows;
  const int cols = sp.n_elements / rows;
  g.elements.resize(3, sp.n_elements);
  for (int m = 0; m < sp.n_elements; ++m) {
    const int r = m / cols, c = m % cols;
    g.elements.col(m) = Eigen::Vector3d(0.0, (c - 0.5 * (cols - 1)) * sp.element_spacing,
                                        (r - 0.5 * (rows - 1)) * sp.element_spacing);
  }

  // BS: linear array along y on the +x side. Jammer: along y on the -x side.
  g.bs.resize(3, sp.n_bs);
  for (int n = 0; n < sp.n_bs; ++n)
    g.bs.col(n) = Eigen::Vector3d(sp.bs_distance, (n - 0.5 * (sp.n_bs - 1)) * da, 0.0);
  g.jammer.resize(3, sp.n_jam);
  for (int n = 0; n < sp.n_jam; ++n)
    g.jammer.col(n) = Eigen::Vector3d(-sp.jam_distance, (n - 0.5 * (sp.n_jam - 1)) * da, 0.0);

  // Users: uniform in a half-disk (by side) of the x-y plane around the surface,
  // with a small exclusion radius so distances stay bounded away from zero.
  const int k_total = sp.users_r + sp.users_t;
  g.users.resize(3, k_total);
  g.side.resize(k_total);
  const double rmin = std::max(sp.user_min_distance, 1e-3);
  for (int k = 0; k < k_total; ++k) {
    const bool r_side = k < sp.users_r;
    const double u = rng.uniform();
    const double rad = std::sqrt(rmin * rmin + u * (sp.user_radius * sp.user_radius - rmin * rmin));
    const double ang = rng.uniform(0.0, kPi);  // half-plane angle
    double x = rad * std::sin(ang);            // > 0
    if (!r_side) x = -x;
    g.users.col(k) = Eigen::Vector3d(x, rad * std::cos(ang), 0.0);
    g.side[k] = r_side ? Side::R : Side::T;
  }
  return g;
}

cplx cascaded_los_gain(double d1, double d2, double wavelength, double alpha,
                       double power_gain) {
  check_distance(d1, "cascade hop 1");
  check_distance(d2, "cascade hop 2");
  const double mag = wavelength * std::sqrt(power_gain) /
                     (kFourPiPow32 * std::pow(d1, alpha) * std::pow(d2, alpha));
  const double phase = -kTwoPi * (d1 + d2) / wavelength;
  return std::polar(mag, phase);
}

cplx direct_los_gain(double d, double wavelength, double alpha, double power_gain) {
  check_distance(d, "direct link");
  const double mag = std::sqrt(power_gain * std::pow(d, -alpha));
  return std::polar(mag, -kTwoPi * d / wavelength);
}

double cascaded_nlos_pathloss(double d1, double d2, double wavelength, double alpha_nlos) {
  check_distance(d1, "cascade hop 1");
  check_distance(d2, "cascade hop 2");
  return wavelength / (kFourPiPow32 * std::pow(d1, alpha_nlos) * std::pow(d2, alpha_nlos));
}

double direct_nlos_pathloss(double d, double alpha_nlos) {
  check_distance(d, "direct link");
  return std::sqrt(std::pow(d, -alpha_nlos));
}

cplx nlos_gain(double pathloss, Rng& rng) { return pathloss * rng.cnormal(); }

namespace {

// Rician mix of a deterministic LoS value and a scattered draw.
cplx rician(cplx los, double nlos_pl, double kappa, Rng& rng) {
  const double w_los = std::sqrt(kappa / (1.0 + kappa));
  const double w_nlos = std::sqrt(1.0 / (1.0 + kappa));
  return w_los * los + w_nlos * nlos_gain(nlos_pl, rng);
}

MatrixXcd cascade_matrix(const Geometry& g, const Eigen::Matrix3Xd& ants,
                         const Eigen::Vector3d& user, Rng& rng) {
  const int m_n = g.n_elements(), a_n = static_cast<int>(ants.cols());
  const double gain = g.gain_tx * g.gain_rx * g.gain_surface;
  MatrixXcd h(m_n, a_n);
  for (int n = 0; n < a_n; ++n)
    for (int m = 0; m < m_n; ++m) {
      const double d1 = (ants.col(n) - g.elements.col(m)).norm();
      const double d2 = (user - g.elements.col(m)).norm();
      h(m, n) = rician(cascaded_los_gain(d1, d2, g.wavelength, g.alpha, gain),
                       cascaded_nlos_pathloss(d1, d2, g.wavelength, g.alpha_nlos), g.kappa, rng);
    }
  return h;
}

VectorXcd direct_vector(const Geometry& g, const Eigen::Matrix3Xd& ants,
                        const Eigen::Vector3d& user, Rng& rng) {
  const int a_n = static_cast<int>(ants.cols());
  const double gain = g.gain_tx * g.gain_rx * g.gain_direct;
  VectorXcd h(a_n);
  for (int n = 0; n < a_n; ++n) {
    const double d = (ants.col(n) - user).norm();
    h(n) = rician(direct_los_gain(d, g.wavelength, g.alpha, gain),
                  direct_nlos_pathloss(d, g.alpha_nlos), g.kappa, rng);
  }
  return h;
}

}  // namespace

ChannelSet sample_channel_set(const Geometry& g, Rng& rng) {
  const int k_n = g.n_users();
  if (static_cast<int>(g.side.size()) != k_n)
    throw InvalidArgument("channel: side tags and user count disagree");
  for (int k = 0; k < k_n; ++k) {
    const bool r_side = g.users(0, k) > 0.0;
    if (r_side != (g.side[k] == Side::R))
      throw InvalidArgument("channel: user side tag contradicts its position");
  }

  ChannelSet cs;
  cs.bs_cascade.reserve(k_n);
  for (int k = 0; k < k_n; ++k) {
    const Eigen::Vector3d u = g.users.col(k);
    cs.bs_cascade.push_back(cascade_matrix(g, g.bs, u, rng));
    cs.bs_direct.push_back(direct_vector(g, g.bs, u, rng));
    cs.jam_cascade.push_back(cascade_matrix(g, g.jammer, u, rng));
    cs.jam_direct.push_back(direct_vector(g, g.jammer, u, rng));
  }
  cs.jam_cascade_est = cs.jam_cascade;
  cs.jam_direct_est = cs.jam_direct;
  cs.radius_direct.assign(k_n, 0.0);
  cs.radius_cascade.assign(k_n, 0.0);
  return cs;
}

void apply_csi_uncertainty(ChannelSet& cs, double zeta_d, double zeta_j, Rng& rng) {
  if (zeta_d < 0.0 || zeta_j < 0.0)
    throw InvalidArgument("channel: error levels must be nonnegative");
  const int k_n = cs.n_users();
  for (int k = 0; k < k_n; ++k) {
    {  // direct jamming channel
      const VectorXcd& truth = cs.jam_direct[k];
      double scale = zeta_d * truth.norm();
      for (int tries = 0;; ++tries) {
        const VectorXcd delta = rng.ball_vector(static_cast<int>(truth.size()), scale);
        const VectorXcd est = truth - delta;
        const double radius = zeta_d * est.norm();
        if (delta.norm() <= radius || scale == 0.0) {
          cs.jam_direct_est[k] = est;
          cs.radius_direct[k] = radius;
          break;
        }
        if (tries % 64 == 63) scale *= 0.5;  // shrink so the loop terminates at zeta near 1
      }
    }
    {  // cascaded jamming channel
      const MatrixXcd& truth = cs.jam_cascade[k];
      double scale = zeta_j * truth.norm();
      for (int tries = 0;; ++tries) {
        const MatrixXcd delta =
            rng.ball_matrix(static_cast<int>(truth.rows()), static_cast<int>(truth.cols()), scale);
        const MatrixXcd est = truth - delta;
        const double radius = zeta_j * est.norm();
        if (delta.norm() <= radius || scale == 0.0) {
          cs.jam_cascade_est[k] = est;
          cs.radius_cascade[k] = radius;
          break;
        }
        if (tries % 64 == 63) scale *= 0.5;
      }
    }
  }
}

}  // namespace omnibeam
