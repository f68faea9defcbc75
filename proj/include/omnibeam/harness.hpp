#pragma once

#include <map>
#include <string>
#include <vector>

#include "omnibeam/channel.hpp"
#include "omnibeam/link_eval.hpp"
#include "omnibeam/robust_design.hpp"

namespace omnibeam {

// Codebook knobs riding along with the physical scenario.
struct SurfaceSpec {
  int bits = 2;
  double slope = 1.0;
  double intercept = kPi / 2.0;
  double power_ratio = 1.0;  // reflected over refracted power
};

struct PowerSpec {
  double p_tx_w = dbm_to_watt(40.0);       // BS budget
  double p_jam_w = dbm_to_watt(40.0);      // true jammer power
  double p_jam_est_w = dbm_to_watt(40.0);  // power estimate used by the design
  double eps_power = 0.1;                  // relative power estimation error
  double noise_w = dbm_to_watt(-96.0);
  double tau_rule = 0.3;  // cap = rule * per-user no-surface jamming level
};

struct UncertaintySpec {
  double zeta_sq_direct = 0.1;  // squared normalized radius, direct links
  double zeta_sq_jam = 0.1;     // squared normalized radius, cascades
};

struct AlgorithmSpec {
  RobustForm form = RobustForm::kSProcedure;
  double sca_tol = 1e-4;
  int sca_max_iters = 30;
  int randomize_trials = 100;
  double outer_tol = 1e-3;
  int outer_max_iters = 20;
  int local_search_passes = 2;
  int init_retries = 5;  // fresh random phase draws after a failed start
};

struct RunSpec {
  std::string scheme = "ios";  // ios | irs_signal | irs_jam | no_ris | all
  int trials = 20;
  uint64_t seed = 1;
  std::string out_path;  // empty: no CSV written by monte_carlo
};

struct ExperimentConfig {
  ScenarioParams scenario;
  SurfaceSpec surface;
  PowerSpec power;
  UncertaintySpec uncertainty;
  AlgorithmSpec algorithm;
  RunSpec run;
};

// Parses the JSON config text / file. Unknown keys and malformed values
// throw InvalidArgument. dBm-valued fields are converted to watts here.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
void validate_config(const ExperimentConfig& cfg);

// The four recognized schemes, in canonical order.
const std::vector<std::string>& known_schemes();

// Everything one trial shares across schemes: one layout, one channel draw,
// one jammer beam, one set of jamming caps.
struct TrialInputs {
  Geometry geom;
  ChannelSet channels;
  VectorXcd v_jam;  // realized jammer beam, ||v||^2 = p_jam_w
  VectorXd tau_w;   // per-user cap; +inf when the no-surface level is zero
};

TrialInputs make_trial_inputs(const ExperimentConfig& cfg, uint64_t seed);

struct TrialRecord {
  uint64_t seed = 0;
  std::string scheme;
  int m = 0;
  int bits = 0;
  int outer_iters = 0;
  double sum_rate = 0.0;
  VectorXd rate;         // per user, bits/s/Hz
  VectorXd sinr;         // per user, linear
  VectorXd jam_power_w;  // realized, true channels and beam
  VectorXd tau_w;
  bool converged = false;
  double wall_ms = 0.0;
};

struct OuterResult {
  PhaseConfig config;      // discrete, the configuration actually evaluated
  PhaseConfig continuous;  // pre-commit relaxed phases, for quantization studies
  Precoder pre;            // recomputed at the committed phases
  std::vector<double> trace;  // accepted design objective per outer iteration
  int iterations = 0;
  bool converged = false;  // outer loop settled
  bool violation = false;  // committed phases exceed a jamming cap
};

// Alternates digital precoding and surface design from a seeded random
// codebook start until the design objective stalls, then commits the phases
// to the codebook and refreshes the precoder. scheme "ios" runs the full
// robust design; "irs_signal" runs the reflect-only jammer-oblivious variant.
OuterResult alternate_optimize(const ExperimentConfig& cfg, const TrialInputs& in,
                               uint64_t seed, const std::string& scheme = "ios");

// Runs one scheme of one trial end to end and reports realized link quality
// on the true channels. Accepts any recognized scheme, "ios" included.
TrialRecord run_baseline(const std::string& scheme, const ExperimentConfig& cfg,
                         const TrialInputs& in, uint64_t seed);

struct SchemeSummary {
  std::string scheme;
  int trials = 0;
  double mean_sum_rate = 0.0;
  double stddev_sum_rate = 0.0;
  std::vector<double> jam_power_w;  // per-user realized samples, CDF input
};

struct MonteCarloResult {
  std::vector<TrialRecord> records;
  std::vector<SchemeSummary> summary;
};

// Runs cfg.run.trials paired trials of the configured scheme (or all four),
// trial t under seed base+t. Workers honor OMNIBEAM_THREADS; the output is
// identical for any worker count. Writes records to cfg.run.out_path when set.
MonteCarloResult monte_carlo(const ExperimentConfig& cfg);

// CSV emission: fixed column set, one row per (trial, scheme, user).
std::string csv_header();
std::string csv_rows(const TrialRecord& rec);
void write_csv(const std::string& path, const std::vector<TrialRecord>& records);

// Right-continuous empirical distribution: (value, fraction of samples <= value)
// at each distinct sample value. Empty input throws.
std::vector<std::pair<double, double>> empirical_cdf(std::vector<double> samples);

}  // namespace omnibeam
