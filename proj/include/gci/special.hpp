#pragma once

#include <cmath>
#include <numbers>

#include "gci/errors.hpp"

namespace gci {

// ln Gamma(x) for x > 0. Lanczos approximation (g = 7, 9 terms) with the
// reflection formula below 1/2; absolute error in ln Gamma stays under 1e-13
// on (0, 50].
inline double log_gamma(double x) {
  if (!(x > 0.0)) throw DomainError("log_gamma: argument must be positive");
  if (x < 0.5) {
    return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) - log_gamma(1.0 - x);
  }
  static constexpr double kCoef[9] = {
      0.99999999999980993,     676.5203681218851,     -1259.1392167224028,
      771.32342877765313,      -176.61502916214059,   12.507343278686905,
      -0.13857109526572012,    9.9843695780195716e-6, 1.5056327351493116e-7};
  constexpr double g = 7.0;
  const double z = x - 1.0;
  double a = kCoef[0];
  for (int i = 1; i < 9; ++i) a += kCoef[i] / (z + i);
  const double t = z + g + 0.5;
  return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// P(|X| <= t) for X ~ N(0, variance).
inline double normal_interval_prob(double t, double variance) {
  return std::erf(t / std::sqrt(2.0 * variance));
}

}  // namespace gci
