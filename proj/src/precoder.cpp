#include "omnibeam/precoder.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace omnibeam {

MatrixXcd zero_forcing(const MatrixXcd& h, double cond_cap) {
  const int k = static_cast<int>(h.rows());
  const int nb = static_cast<int>(h.cols());
  if (k == 0 || nb == 0) throw InvalidArgument("zero_forcing: empty channel");
  if (k > nb) throw InvalidArgument("zero_forcing: more users than antennas");

  Eigen::JacobiSVD<MatrixXcd> svd(h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(k - 1);
  if (smin <= 0.0 || smax / smin > cond_cap)
    throw InvalidArgument("zero_forcing: channel is rank deficient (cond > cap)");

  // pinv(h) = V S^{-1} U^H; columns then satisfy h * pinv = I.
  return svd.matrixV() * s.cwiseInverse().asDiagonal() * svd.matrixU().adjoint();
}

VectorXd water_filling(const VectorXd& nu, const VectorXd& interference_plus_noise,
                       double p_total) {
  const int k = static_cast<int>(nu.size());
  if (k == 0) throw InvalidArgument("water_filling: no users");
  if (interference_plus_noise.size() != k)
    throw InvalidArgument("water_filling: size mismatch");
  if (p_total <= 0.0) throw InvalidArgument("water_filling: p_total must be positive");
  for (int i = 0; i < k; ++i) {
    if (nu(i) <= 0.0 || interference_plus_noise(i) <= 0.0)
      throw InvalidArgument("water_filling: nu and noise must be positive");
  }

  // cost of keeping user i at zero allocation: level nu_i * n_i
  VectorXd c = nu.cwiseProduct(interference_plus_noise);
  const double cmax = c.maxCoeff();
  const double cmin = c.minCoeff();

  // f(mu) = sum max(1/mu - c_i, 0) - p_total is decreasing in mu.
  auto budget_gap = [&](double mu) {
    double used = 0.0;
    for (int i = 0; i < k; ++i) used += std::max(1.0 / mu - c(i), 0.0);
    return used - p_total;
  };

  double lo = 1.0 / (cmax + p_total * nu.maxCoeff());
  double hi = 1.0 / cmin;  // 1/hi = cmin spends nothing, so f(hi) <= 0
  while (budget_gap(lo) < 0.0) lo *= 0.5;
  while (budget_gap(hi) > 0.0) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (budget_gap(mid) >= 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= 1e-10 * hi) break;
  }

  // Close the active set exactly: S = {i : 1/mu > c_i}, then
  // 1/mu* = (p_total + sum_S c_i) / |S| spends the budget to machine precision.
  const double mu_bisect = 0.5 * (lo + hi);
  double level = 1.0 / mu_bisect;
  for (int pass = 0; pass < k + 1; ++pass) {
    double csum = 0.0;
    int count = 0;
    for (int i = 0; i < k; ++i) {
      if (level > c(i)) {
        csum += c(i);
        ++count;
      }
    }
    if (count == 0) {
      // numerical corner: admit the cheapest user
      level = std::nextafter(cmin, cmax) + p_total;
      continue;
    }
    const double next = (p_total + csum) / count;
    if (std::abs(next - level) <= 1e-15 * level) {
      level = next;
      break;
    }
    level = next;
  }

  VectorXd p(k);
  for (int i = 0; i < k; ++i) p(i) = std::max(level - c(i), 0.0) / nu(i);
  return p;
}

Precoder assemble_precoder(const MatrixXcd& directions, const VectorXd& powers) {
  const int k = static_cast<int>(directions.cols());
  if (powers.size() != k) throw InvalidArgument("assemble_precoder: size mismatch");
  for (int i = 0; i < k; ++i)
    if (powers(i) < 0.0) throw InvalidArgument("assemble_precoder: negative power");
  Precoder pre;
  pre.directions = directions;
  pre.powers = powers;
  pre.v = directions * powers.cwiseSqrt().asDiagonal();
  return pre;
}

}  // namespace omnibeam
