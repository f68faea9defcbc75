#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "omnibeam/harness.hpp"

namespace omnibeam {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::string& block,
                    const std::set<std::string>& allowed) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key()))
      throw InvalidArgument("config: unknown key '" + block + "." + it.key() + "'");
}

double num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number()) throw InvalidArgument(std::string("config: '") + key + "' must be a number");
  return v.get<double>();
}

int integer(const json& j, const char* key, int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer())
    throw InvalidArgument(std::string("config: '") + key + "' must be an integer");
  return v.get<int>();
}

std::string str(const json& j, const char* key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_string()) throw InvalidArgument(std::string("config: '") + key + "' must be a string");
  return v.get<std::string>();
}

void parse_scenario(const json& j, ScenarioParams& sp) {
  reject_unknown(j, "scenario",
                 {"n_bs", "n_jam", "users_r", "users_t", "n_elements", "bs_distance",
                  "jam_distance", "user_radius", "user_min_distance", "element_spacing",
                  "antenna_spacing", "carrier_hz", "alpha", "alpha_nlos", "kappa",
                  "gain_surface", "gain_direct"});
  sp.n_bs = integer(j, "n_bs", sp.n_bs);
  sp.n_jam = integer(j, "n_jam", sp.n_jam);
  sp.users_r = integer(j, "users_r", sp.users_r);
  sp.users_t = integer(j, "users_t", sp.users_t);
  sp.n_elements = integer(j, "n_elements", sp.n_elements);
  sp.bs_distance = num(j, "bs_distance", sp.bs_distance);
  sp.jam_distance = num(j, "jam_distance", sp.jam_distance);
  sp.user_radius = num(j, "user_radius", sp.user_radius);
  sp.user_min_distance = num(j, "user_min_distance", sp.user_min_distance);
  sp.element_spacing = num(j, "element_spacing", sp.element_spacing);
  sp.antenna_spacing = num(j, "antenna_spacing", sp.antenna_spacing);
  sp.carrier_hz = num(j, "carrier_hz", sp.carrier_hz);
  sp.alpha = num(j, "alpha", sp.alpha);
  sp.alpha_nlos = num(j, "alpha_nlos", sp.alpha_nlos);
  sp.kappa = num(j, "kappa", sp.kappa);
  sp.gain_surface = num(j, "gain_surface", sp.gain_surface);
  sp.gain_direct = num(j, "gain_direct", sp.gain_direct);
}

void parse_surface(const json& j, SurfaceSpec& s) {
  reject_unknown(j, "surface", {"bits", "slope", "intercept_deg", "power_ratio"});
  s.bits = integer(j, "bits", s.bits);
  s.slope = num(j, "slope", s.slope);
  s.intercept = num(j, "intercept_deg", s.intercept * 180.0 / kPi) * kPi / 180.0;
  s.power_ratio = num(j, "power_ratio", s.power_ratio);
}

void parse_power(const json& j, PowerSpec& p) {
  reject_unknown(j, "power",
                 {"p_tx_dbm", "p_jam_dbm", "p_jam_est_dbm", "eps_power", "noise_dbm",
                  "tau_rule"});
  p.p_tx_w = dbm_to_watt(num(j, "p_tx_dbm", watt_to_dbm(p.p_tx_w)));
  if (j.contains("p_jam_dbm")) {
    const double v = j.at("p_jam_dbm").get<double>();
    p.p_jam_w = std::isinf(v) && v < 0.0 ? 0.0 : dbm_to_watt(v);
  }
  if (j.contains("p_jam_est_dbm")) {
    const double v = j.at("p_jam_est_dbm").get<double>();
    p.p_jam_est_w = std::isinf(v) && v < 0.0 ? 0.0 : dbm_to_watt(v);
  }
  p.eps_power = num(j, "eps_power", p.eps_power);
  p.noise_w = dbm_to_watt(num(j, "noise_dbm", watt_to_dbm(p.noise_w)));
  p.tau_rule = num(j, "tau_rule", p.tau_rule);
}

void parse_uncertainty(const json& j, UncertaintySpec& u) {
  reject_unknown(j, "uncertainty", {"zeta_sq_direct", "zeta_sq_jam"});
  u.zeta_sq_direct = num(j, "zeta_sq_direct", u.zeta_sq_direct);
  u.zeta_sq_jam = num(j, "zeta_sq_jam", u.zeta_sq_jam);
}

void parse_algorithm(const json& j, AlgorithmSpec& a) {
  reject_unknown(j, "algorithm",
                 {"form", "sca_tol", "sca_max_iters", "randomize_trials", "outer_tol",
                  "outer_max_iters", "local_search_passes", "init_retries"});
  const std::string form = str(j, "form", "");
  if (form == "s_procedure")
    a.form = RobustForm::kSProcedure;
  else if (form == "norm_bound")
    a.form = RobustForm::kNormBound;
  else if (!form.empty())
    throw InvalidArgument("config: unknown algorithm.form '" + form + "'");
  a.sca_tol = num(j, "sca_tol", a.sca_tol);
  a.sca_max_iters = integer(j, "sca_max_iters", a.sca_max_iters);
  a.randomize_trials = integer(j, "randomize_trials", a.randomize_trials);
  a.outer_tol = num(j, "outer_tol", a.outer_tol);
  a.outer_max_iters = integer(j, "outer_max_iters", a.outer_max_iters);
  a.local_search_passes = integer(j, "local_search_passes", a.local_search_passes);
  a.init_retries = integer(j, "init_retries", a.init_retries);
}

void parse_run(const json& j, RunSpec& r) {
  reject_unknown(j, "run", {"scheme", "trials", "seed", "out"});
  r.scheme = str(j, "scheme", r.scheme);
  r.trials = integer(j, "trials", r.trials);
  if (j.contains("seed")) r.seed = j.at("seed").get<uint64_t>();
  r.out_path = str(j, "out", r.out_path);
}

void check_positive(double v, const char* what) {
  if (!(v > 0.0)) throw InvalidArgument(std::string("config: ") + what + " must be positive");
}

}  // namespace

const std::vector<std::string>& known_schemes() {
  static const std::vector<std::string> k = {"ios", "irs_signal", "irs_jam", "no_ris"};
  return k;
}

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  try {
    reject_unknown(j, "", {"scenario", "surface", "power", "uncertainty", "algorithm", "run"});
    if (j.contains("scenario")) parse_scenario(j.at("scenario"), cfg.scenario);
    if (j.contains("surface")) parse_surface(j.at("surface"), cfg.surface);
    if (j.contains("power")) parse_power(j.at("power"), cfg.power);
    if (j.contains("uncertainty")) parse_uncertainty(j.at("uncertainty"), cfg.uncertainty);
    if (j.contains("algorithm")) parse_algorithm(j.at("algorithm"), cfg.algorithm);
    if (j.contains("run")) parse_run(j.at("run"), cfg.run);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidArgument("config: cannot read '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void validate_config(const ExperimentConfig& cfg) {
  const auto& sp = cfg.scenario;
  if (sp.n_bs < 1 || sp.n_jam < 1 || sp.n_elements < 1)
    throw InvalidArgument("config: antenna/element counts must be >= 1");
  if (sp.users_r < 0 || sp.users_t < 0 || sp.users_r + sp.users_t < 1)
    throw InvalidArgument("config: need at least one user");
  if (sp.users_r + sp.users_t > sp.n_bs)
    throw InvalidArgument("config: interference nulling needs K <= N_b");
  check_positive(sp.bs_distance, "bs_distance");
  check_positive(sp.jam_distance, "jam_distance");
  check_positive(sp.user_radius, "user_radius");
  check_positive(sp.user_min_distance, "user_min_distance");
  check_positive(sp.element_spacing, "element_spacing");
  if (sp.antenna_spacing < 0.0) throw InvalidArgument("config: antenna_spacing must be >= 0");
  check_positive(sp.carrier_hz, "carrier_hz");
  check_positive(sp.alpha, "alpha");
  check_positive(sp.alpha_nlos, "alpha_nlos");
  if (sp.kappa < 0.0) throw InvalidArgument("config: kappa must be >= 0");
  check_positive(sp.gain_surface, "gain_surface");
  check_positive(sp.gain_direct, "gain_direct");

  if (cfg.surface.bits < 1 || cfg.surface.bits > 16)
    throw InvalidArgument("config: bits must be in [1, 16]");
  check_positive(cfg.surface.power_ratio, "power_ratio");

  const auto& pw = cfg.power;
  check_positive(pw.p_tx_w, "p_tx");
  if (pw.p_jam_w < 0.0 || pw.p_jam_est_w < 0.0)
    throw InvalidArgument("config: jammer powers must be >= 0");
  if (pw.eps_power < 0.0 || pw.eps_power >= 1.0)
    throw InvalidArgument("config: eps_power must be in [0, 1)");
  check_positive(pw.noise_w, "noise");
  if (!(pw.tau_rule > 0.0 && pw.tau_rule <= 1.0))
    throw InvalidArgument("config: tau_rule must be in (0, 1]");

  if (cfg.uncertainty.zeta_sq_direct < 0.0 || cfg.uncertainty.zeta_sq_jam < 0.0)
    throw InvalidArgument("config: uncertainty levels must be >= 0");

  const auto& al = cfg.algorithm;
  check_positive(al.sca_tol, "sca_tol");
  check_positive(al.outer_tol, "outer_tol");
  if (al.sca_max_iters < 1 || al.outer_max_iters < 1)
    throw InvalidArgument("config: iteration caps must be >= 1");
  if (al.randomize_trials < 1) throw InvalidArgument("config: randomize_trials must be >= 1");
  if (al.local_search_passes < 1)
    throw InvalidArgument("config: local_search_passes must be >= 1");
  if (al.init_retries < 1) throw InvalidArgument("config: init_retries must be >= 1");

  const auto& run = cfg.run;
  if (run.trials < 1) throw InvalidArgument("config: trials must be >= 1");
  if (run.scheme != "all") {
    const auto& ks = known_schemes();
    if (std::find(ks.begin(), ks.end(), run.scheme) == ks.end())
      throw InvalidArgument("config: unknown scheme '" + run.scheme + "'");
  }
}

}  // namespace omnibeam
