#pragma once

#include <cmath>
#include <limits>
#include <numbers>

namespace fbp {

/// Digamma psi(x) for x > 0: recurrence up to x >= 10, then the asymptotic
/// series in 1/x^2 through the B_12 term.
inline double digamma(double x) {
  if (!(x > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  double acc = 0.0;
  while (x < 10.0) {
    acc -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  const double series =
      inv2 * (1.0 / 12.0 -
              inv2 * (1.0 / 120.0 -
                      inv2 * (1.0 / 252.0 -
                              inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0))))));
  return acc + std::log(x) - 0.5 * inv - series;
}

inline double log_gamma(double x) { return std::lgamma(x); }

}  // namespace fbp
