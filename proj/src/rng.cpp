#include "omnibeam/rng.hpp"

#include <cmath>

namespace omnibeam {

int Rng::uniform_int(int n) {
  if (n <= 0) throw InvalidArgument("uniform_int: n must be positive");
  // rejection sampling to avoid modulo bias
  const std::uint64_t un = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % un;
  std::uint64_t x;
  do {
    x = gen_();
  } while (x >= limit);
  return static_cast<int>(x % un);
}

double Rng::normal() {
  if (have_cached_) {
    have_cached_ = false;
    return cached_;
  }
  double u1, u2;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = kTwoPi * u2;
  cached_ = r * std::sin(a);
  have_cached_ = true;
  return r * std::cos(a);
}

VectorXcd Rng::cnormal_vector(int n) {
  VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = cnormal();
  return v;
}

MatrixXcd Rng::cnormal_matrix(int rows, int cols) {
  MatrixXcd m(rows, cols);
  // column-major fill so results match vector reshaping
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = cnormal();
  return m;
}

VectorXcd Rng::ball_vector(int n, double radius) {
  VectorXcd v = cnormal_vector(n);
  const double nrm = v.norm();
  if (nrm == 0.0) return VectorXcd::Zero(n);
  const double u = uniform();
  const double scale = radius * std::pow(u, 1.0 / (2.0 * n)) / nrm;
  return scale * v;
}

MatrixXcd Rng::ball_matrix(int rows, int cols, double radius) {
  MatrixXcd m = cnormal_matrix(rows, cols);
  const double nrm = m.norm();
  if (nrm == 0.0) return MatrixXcd::Zero(rows, cols);
  const double u = uniform();
  const double n = static_cast<double>(rows) * cols;
  const double scale = radius * std::pow(u, 1.0 / (2.0 * n)) / nrm;
  return scale * m;
}

}  // namespace omnibeam
