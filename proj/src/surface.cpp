#include "omnibeam/surface.hpp"

#include <cmath>

namespace omnibeam {

Codebook build_codebook(int bits, double slope, double intercept, double power_ratio) {
  if (bits < 1) throw InvalidArgument("codebook: bits must be >= 1");
  if (!(power_ratio > 0.0)) throw InvalidArgument("codebook: power ratio must be positive");
  Codebook cb;
  cb.bits = bits;
  cb.slope = slope;
  cb.intercept = intercept;
  cb.amp_r = std::sqrt(power_ratio / (1.0 + power_ratio));
  cb.amp_t = std::sqrt(1.0 / (1.0 + power_ratio));
  const int n = 1 << bits;
  cb.phase_r.resize(n);
  cb.phase_t.resize(n);
  for (int l = 0; l < n; ++l) {
    cb.phase_r(l) = kTwoPi * l / n;
    cb.phase_t(l) = wrap_angle(slope * cb.phase_r(l) + intercept);
  }
  return cb;
}

PhaseConfig config_from_reflection(const VectorXd& phase_r, const Codebook& cb, bool discrete) {
  PhaseConfig cfg;
  cfg.phase_r = phase_r.unaryExpr([](double a) { return wrap_angle(a); });
  cfg.phase_t.resize(phase_r.size());
  for (int m = 0; m < phase_r.size(); ++m)
    cfg.phase_t(m) = wrap_angle(cb.slope * cfg.phase_r(m) + cb.intercept);
  cfg.discrete = discrete;
  return cfg;
}

PhaseConfig random_codebook_config(const Codebook& cb, int n_elements, Rng& rng) {
  VectorXd pr(n_elements);
  for (int m = 0; m < n_elements; ++m) pr(m) = cb.phase_r(rng.uniform_int(cb.size()));
  return config_from_reflection(pr, cb, true);
}

SurfaceResponse surface_response(const PhaseConfig& cfg, const Codebook& cb) {
  const int m_n = cfg.n_elements();
  if (cfg.phase_t.size() != m_n) throw InvalidArgument("surface: phase vector lengths disagree");
  SurfaceResponse r;
  r.g_r.resize(m_n);
  r.g_t.resize(m_n);
  for (int m = 0; m < m_n; ++m) {
    r.g_r(m) = std::polar(cb.amp_r, cfg.phase_r(m));
    r.g_t(m) = std::polar(cb.amp_t, cfg.phase_t(m));
  }
  return r;
}

VectorXcd effective_channel(const VectorXcd& direct, const MatrixXcd& cascade,
                            const VectorXcd& g_side) {
  if (cascade.rows() != g_side.size() || cascade.cols() != direct.size())
    throw InvalidArgument("surface: effective channel dimension mismatch");
  return direct + cascade.adjoint() * g_side;
}

MatrixXcd coupling_matrix(int n_elements, double slope, double intercept) {
  if (slope != 1.0)
    throw InvalidArgument(
        "coupling: only unit slope keeps the lifted map linear; run the fixed-point path for "
        "general slopes");
  const int d = n_elements + 1;
  MatrixXcd c = MatrixXcd::Ones(d, d);
  const cplx last = std::polar(1.0, -intercept);
  for (int m = 0; m < n_elements; ++m) {
    c(m, d - 1) = last;
    c(d - 1, m) = std::conj(last);
  }
  return c;
}

VectorXcd lift_vector(const VectorXd& phase_r) {
  const int m_n = static_cast<int>(phase_r.size());
  VectorXcd q(m_n + 1);
  for (int m = 0; m < m_n; ++m) q(m) = std::polar(1.0, -phase_r(m));
  q(m_n) = 1.0;
  return q;
}

std::pair<int, int> bracket_entries(const Codebook& cb, double phase_r_continuous) {
  const int n = cb.size();
  const double step = kTwoPi / n;
  const double p = wrap_angle(phase_r_continuous);
  int l = static_cast<int>(std::floor(p / step));
  if (l >= n) l = n - 1;
  // Exact grid hit degenerates to a single option.
  const double frac = p - l * step;
  if (frac < 1e-12 * kTwoPi) return {l, l};
  return {l, (l + 1) % n};
}

}  // namespace omnibeam
