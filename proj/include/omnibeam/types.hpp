#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace omnibeam {

using cplx = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;
using Eigen::VectorXi;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr cplx kImag{0.0, 1.0};

// dBm <-> watt. 0 dBm = 1 mW.
inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) {
  if (w <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(w / 1e-3);
}
inline double db_to_lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin_to_db(double lin) { return 10.0 * std::log10(lin); }

// Wraps an angle into [0, 2*pi).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

// Which side of the surface a user sits on. R: same side as the BS (served by
// reflection), T: opposite side (served by refraction). Jamming reaches a user
// through the opposite mechanism (the jammer sits across the surface from the BS).
enum class Side { R, T };

struct OmnibeamError : std::runtime_error {
  explicit OmnibeamError(const std::string& what) : std::runtime_error(what) {}
};

// Input/contract violation (bad argument, malformed config).
struct InvalidArgument : OmnibeamError {
  explicit InvalidArgument(const std::string& what) : OmnibeamError(what) {}
};

// A requested problem is provably unsatisfiable (e.g. jamming caps too tight).
struct InfeasibleProblem : OmnibeamError {
  explicit InfeasibleProblem(const std::string& what, std::vector<int> users = {})
      : OmnibeamError(what), violating_users(std::move(users)) {}
  std::vector<int> violating_users;
};

// Resource limits (e.g. cone dimension above the configured cap).
struct CapacityError : OmnibeamError {
  explicit CapacityError(const std::string& what) : OmnibeamError(what) {}
};

// Rank-one recovery sampled `trials` candidates and none satisfied the caps;
// the caller may retry with more trials.
struct NoFeasibleCandidate : OmnibeamError {
  explicit NoFeasibleCandidate(const std::string& what) : OmnibeamError(what) {}
};

}  // namespace omnibeam
