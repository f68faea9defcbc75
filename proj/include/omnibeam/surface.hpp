#pragma once

#include "omnibeam/rng.hpp"
#include "omnibeam/types.hpp"

namespace omnibeam {

// Discrete coupled reflect/refract phase states of one element. All elements
// share the codebook: 2^bits states, reflection phases on a uniform grid and
// refraction phases tied through phase_t = slope * phase_r + intercept (mod 2 pi).
// Amplitudes follow from the reflect/refract power ratio: amp_r^2 + amp_t^2 = 1.
struct Codebook {
  int bits = 2;
  double slope = 1.0;
  double intercept = kPi / 2.0;
  double amp_r = 0.0;
  double amp_t = 0.0;
  VectorXd phase_r;  // 2^bits entries, ascending
  VectorXd phase_t;

  int size() const { return static_cast<int>(phase_r.size()); }
};

Codebook build_codebook(int bits, double slope, double intercept, double power_ratio);

// Per-element phase shifts. When discrete, every pair must be a codebook
// entry; when continuous, the coupling relation still holds entrywise.
struct PhaseConfig {
  VectorXd phase_r;
  VectorXd phase_t;
  bool discrete = false;

  int n_elements() const { return static_cast<int>(phase_r.size()); }
};

// Builds a config from reflection phases, deriving refraction through the
// codebook's coupling line.
PhaseConfig config_from_reflection(const VectorXd& phase_r, const Codebook& cb, bool discrete);

// Uniformly random codebook state per element.
PhaseConfig random_codebook_config(const Codebook& cb, int n_elements, Rng& rng);

// Mechanism amplitudes seen by each role. The full surface uses the codebook
// pair for both roles; degraded configurations (reflect-only panels, no
// surface) override individual entries with 1 or 0.
struct RoleAmps {
  double des_refl = 0.0;  // desired signal through reflection
  double des_refr = 0.0;  // desired signal through refraction
  double jam_refl = 0.0;  // jamming through reflection
  double jam_refr = 0.0;  // jamming through refraction
};

inline RoleAmps codebook_amps(const Codebook& cb) {
  return {cb.amp_r, cb.amp_t, cb.amp_r, cb.amp_t};
}

// Stacked surface response vectors. Entries are conjugate-stacked relative to
// the per-element responses amp * e^{-j phase}: g[m] = amp * e^{+j phase_m},
// so that g^H applied to a cascade reproduces the element responses.
struct SurfaceResponse {
  VectorXcd g_r;
  VectorXcd g_t;
};

SurfaceResponse surface_response(const PhaseConfig& cfg, const Codebook& cb);

// (direct^H + g_side^H cascade)^H = direct + cascade^H g_side.
VectorXcd effective_channel(const VectorXcd& direct, const MatrixXcd& cascade,
                            const VectorXcd& g_side);

// Entrywise multiplier C mapping the lifted reflection matrix to the lifted
// refraction matrix under unit slope: with the lift q[m] = e^{-j phase_r_m},
// q[M] = 1 (0-based last index), the refraction lift satisfies
// Q_t = C o Q_r exactly at rank one. Diagonal and interior entries 1, last
// column e^{-j intercept}, last row e^{+j intercept}. Requires slope == 1.
MatrixXcd coupling_matrix(int n_elements, double slope, double intercept);

// Lift of a reflection-phase vector: q[m] = e^{-j phase_r_m}, last entry 1.
VectorXcd lift_vector(const VectorXd& phase_r);

// Indices of the codebook entries bracketing a continuous reflection phase
// (wrapping at the grid boundary). Returns {l, l} when the phase sits exactly
// on entry l.
std::pair<int, int> bracket_entries(const Codebook& cb, double phase_r_continuous);

}  // namespace omnibeam
