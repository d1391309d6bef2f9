// Marchenko-Pastur law: density, support, CDF and bulk expectations.
// Convention: q = N/T < 1, unit-variance variables, so the bulk sits on
// [(1-sqrt(q))^2, (1+sqrt(q))^2] and the mean eigenvalue is 1.

#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "wse/quadrature.hpp"

namespace wse {

inline void check_mp_ratio(double q) {
  if (!(q > 0.0 && q < 1.0))
    throw std::invalid_argument("marchenko-pastur: requires 0 < q = N/T < 1");
}

inline std::pair<double, double> mp_edges(double q) {
  check_mp_ratio(q);
  const double s = std::sqrt(q);
  return {(1.0 - s) * (1.0 - s), (1.0 + s) * (1.0 + s)};
}

inline double mp_density(double lambda, double q) {
  check_mp_ratio(q);
  const auto [lo, hi] = mp_edges(q);
  if (lambda <= lo || lambda >= hi) return 0.0;
  const double disc = 4.0 * lambda * q - (lambda - 1.0 + q) * (lambda - 1.0 + q);
  if (disc <= 0.0) return 0.0;
  return std::sqrt(disc) / (2.0 * M_PI * lambda * q);
}

// E[f(lambda)] over the bulk. The substitution lambda = c + R sin(theta)
// absorbs the square-root edges, so fixed-order Gauss-Legendre converges fast.
template <class F>
double mp_expectation(F f, double q, int order = 160) {
  check_mp_ratio(q);
  const auto [lo, hi] = mp_edges(q);
  const double c = 0.5 * (lo + hi), radius = 0.5 * (hi - lo);
  const QuadratureRule rule = gauss_legendre(order);
  double acc = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    const double theta = 0.5 * M_PI * rule.nodes[i];
    const double lambda = c + radius * std::sin(theta);
    const double jac = radius * std::cos(theta) * 0.5 * M_PI;
    // sqrt((hi-l)(l-lo)) = R cos(theta)
    const double w = radius * std::cos(theta) / (2.0 * M_PI * lambda * q);
    acc += rule.weights[i] * jac * w * f(lambda);
  }
  return acc;
}

inline double mp_cdf(double lambda, double q) {
  check_mp_ratio(q);
  const auto [lo, hi] = mp_edges(q);
  if (lambda <= lo) return 0.0;
  if (lambda >= hi) return 1.0;
  const double c = 0.5 * (lo + hi), radius = 0.5 * (hi - lo);
  const double theta_up = std::asin(std::clamp((lambda - c) / radius, -1.0, 1.0));
  const QuadratureRule rule = gauss_legendre(96);
  // integrate density over theta in [-pi/2, theta_up]
  const double mid = 0.5 * (theta_up - (-0.5 * M_PI)), cen = 0.5 * (theta_up + (-0.5 * M_PI));
  double acc = 0.0;
  for (int i = 0; i < rule.size(); ++i) {
    const double theta = cen + mid * rule.nodes[i];
    const double lam = c + radius * std::sin(theta);
    const double w = radius * std::cos(theta) / (2.0 * M_PI * lam * q);
    acc += rule.weights[i] * mid * radius * std::cos(theta) * w;
  }
  return std::clamp(acc, 0.0, 1.0);
}

// Closed forms used as cross-checks: E[log lambda] and E[1/lambda].
inline double mp_mean_log(double q) {
  check_mp_ratio(q);
  return (q - 1.0) / q * std::log1p(-q) - 1.0;
}

inline double mp_mean_inverse(double q) {
  check_mp_ratio(q);
  return 1.0 / (1.0 - q);  // = Q/(Q-1) with Q = 1/q
}

}  // namespace wse
