#pragma once

#include <functional>

#include "omnibeam/channel.hpp"
#include "omnibeam/conic.hpp"
#include "omnibeam/precoder.hpp"
#include "omnibeam/robust_bounds.hpp"
#include "omnibeam/rng.hpp"
#include "omnibeam/surface.hpp"

namespace omnibeam {

// How the worst-case jamming constraint enters the subproblem.
enum class RobustForm {
  kSProcedure,  // matrix uncertainty LMI per user, size N_j + M + 1
  kNormBound,   // scalar norm-ball bound with a tangent linearization
};

// Everything the phase designer needs, expressed against the lifted
// reflection variable. Desired quantities use the true BS channels (data CSI
// is known at the BS); jamming quantities use only estimates plus radii.
// fold flags mark coefficients that live on the refraction lift and must be
// pulled back through the coupling map.
struct SdrContext {
  std::vector<VectorXcd> desired;  // w_k, length M+1: |w_k^H q|^2 = received power
  std::vector<bool> fold_desired;
  std::vector<MatrixXcd> jam;  // A_k, N_j x (M+1), lifted estimated jamming channel
  std::vector<bool> fold_jam;
  MatrixXcd coupling;  // (M+1)^2 entrywise reflection -> refraction multiplier
  double slope = 1.0;
  double intercept = 0.0;
  RobustParams robust;
  double noise_w = 0.0;

  int n_users() const { return static_cast<int>(desired.size()); }
  int n_elements() const { return static_cast<int>(coupling.rows()) - 1; }

  // Desired-signal coefficient on the reflection lift (fold applied).
  MatrixXcd desired_coefficient(int k) const;
  // Worst-case-jamming trace coefficient on the reflection lift.
  MatrixXcd jam_coefficient(int k) const;
  // Refraction lift of a reflection lift (entrywise phase shift, last entry kept).
  VectorXcd fold_lift(const VectorXcd& lift) const;
  // Closed-form worst-case jamming bound for user k at a rank-one lift.
  double worst_case(int k, const VectorXcd& lift) const;
};

SdrContext make_sdr_context(const ChannelSet& cs, const std::vector<Side>& side,
                            const Precoder& pre, double slope, double intercept,
                            const RoleAmps& amps, const RobustParams& rp, double noise_w);

// Point the convexification is tangent at. u is a linear SINR, t is in watts,
// w_prev holds the previous squared received-norm surrogates ||A_k q_s||^2
// (needed by the norm-bound form only).
struct SdrIterate {
  VectorXd u;       // previous SINR auxiliaries, > 0 where the user is active
  VectorXd t;       // previous jamming-plus-noise auxiliaries, > 0, watts
  VectorXd w_prev;  // previous jamming trace values (norm-bound form)
};

// Block indices of the emitted problem, for the driver and for tests.
// Powers inside the problem are normalized: u is a plain SINR, t is the
// jamming-plus-noise power in units of the noise, and each slack matrix is
// scaled down by jam_scale[k]^2 (recover the wattage as scale^2 * value).
struct SdrLayout {
  int lift = -1;
  std::vector<int> u, t, r;
  std::vector<int> upsilon, rho;  // S-procedure form only, -1 otherwise
  std::vector<double> jam_scale;  // per-user lifted-channel normalization
  // Block values are kept near 1 by measuring each auxiliary against its
  // tangency point: physical SINR = u_scale * u-block, watts = t_scale * t-block.
  std::vector<double> u_scale, t_scale;
};

// One inner convex step: maximize sum_k r_k with epigraph cuts r_k <= tangent
// lines of log2(1+u), the quadratic-over-previous-iterate signal constraint,
// and per-user worst-case jamming constraints in the requested form.
ConicProblem build_sca_subproblem(const SdrContext& ctx, const SdrIterate& prev,
                                  RobustForm form, SdrLayout* layout = nullptr);

struct SdrOptions {
  RobustForm form = RobustForm::kSProcedure;
  int max_iterations = 30;
  double objective_tol = 1e-4;  // relative successive-objective stop
  int cut_rounds = 6;           // epigraph refinement solves per step
  double cut_tol = 1e-8;
  int randomize_trials = 100;
  double eigen_ratio = 1e4;  // top-two eigenvalue ratio for direct recovery
  uint64_t seed = 1;
  SolverOptions solver = [] {
    SolverOptions s;
    s.gap_tol = 1e-7;  // the dense IPM floor sits near 1e-8 on these cones
    return s;
  }();
};

struct SdrTraceEntry {
  int iteration = 0;
  double objective = 0.0;      // sum_k log2(1 + u_k) at the solved point
  double max_violation = 0.0;  // solver primal residual at exit
  SolveStatus status = SolveStatus::kOptimal;
};

struct SdrResult {
  PhaseConfig continuous;
  VectorXcd lift;  // recovered unit-modulus lift, last entry 1
  MatrixXcd xi;    // solved lifted reflection matrix
  std::vector<SdrTraceEntry> trace;
  bool converged = false;
};

// Full successive-convexification loop with rank-one recovery. Throws
// InfeasibleProblem (with the violating user set) when thresholds are
// certifiably unattainable or the first subproblem is infeasible.
SdrResult solve_phase_sdr(const SdrContext& ctx, const PhaseConfig& init,
                          const SdrOptions& opt);

// Jamming-minimization variant: minimize sum_k of the worst-case jamming
// trace over the lift, no rate machinery. Single solve plus recovery.
SdrResult solve_jam_min_sdr(const SdrContext& ctx, const SdrOptions& opt);

// Draws candidates ~ CN(0, xi), projects entries to unit modulus (zero maps
// to 1), fixes the global phase so the last entry is 1, and returns the
// best candidate under `objective` among those passing `feasible`.
// Deterministic per seed schedule regardless of evaluation order.
VectorXcd randomize_rank_one(const MatrixXcd& xi, int trials,
                             const std::function<double(const VectorXcd&)>& objective,
                             const std::function<bool(const VectorXcd&)>& feasible,
                             uint64_t seed);

struct DiscretizeResult {
  PhaseConfig config;
  bool violation = false;  // final configuration leaves some margin positive
};

// Element-by-element commit to the codebook: each element tries the two
// entries bracketing its continuous reflection phase, keeps the sum-rate
// maximizer among candidates whose jamming margins (J - tau, per user) are
// all <= 0, falling back to the smaller maximum violation. `passes` > 1
// re-sweeps from the committed configuration.
DiscretizeResult discretize_local_search(
    const PhaseConfig& continuous, const Codebook& cb,
    const std::function<double(const PhaseConfig&)>& sum_rate_eval,
    const std::function<VectorXd(const PhaseConfig&)>& jamming_margin, int passes = 1);

}  // namespace omnibeam
