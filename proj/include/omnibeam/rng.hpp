#pragma once

#include <cstdint>
#include <random>

#include "omnibeam/types.hpp"

namespace omnibeam {

// Deterministic random stream. All distributions are implemented on top of the
// raw 64-bit generator output so results are identical across standard library
// implementations (std::normal_distribution is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t raw() { return gen_(); }

  // Uniform on [0, 1): 53-bit mantissa.
  double uniform() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n);  // uniform on {0, ..., n-1}

  // Standard normal via Box-Muller (cached second value).
  double normal();

  // CN(0, 1): complex with independent N(0, 1/2) parts.
  cplx cnormal() { return cplx(normal() * M_SQRT1_2, normal() * M_SQRT1_2); }

  VectorXcd cnormal_vector(int n);
  MatrixXcd cnormal_matrix(int rows, int cols);

  // Uniform in the complex Frobenius ball of given radius: direction uniform on
  // the sphere, radius scaled by U^(1/(2n)) with n complex entries.
  VectorXcd ball_vector(int n, double radius);
  MatrixXcd ball_matrix(int rows, int cols, double radius);

 private:
  std::mt19937_64 gen_;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

// Stream for a given trial: decorrelated from neighbouring trials regardless of
// execution order or thread count.
inline std::uint64_t trial_seed(std::uint64_t base_seed, int trial) {
  std::uint64_t x = base_seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(trial + 1);
  // splitmix64 finalizer
  x ^= x >> 30;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 27;
  x *= 0x94d049bb133111ebULL;
  x ^= x >> 31;
  return x;
}

}  // namespace omnibeam
