#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

namespace fbp::quad {

namespace detail {

template <int N>
struct GaussLegendreRule {
  std::array<double, N> nodes{};
  std::array<double, N> weights{};

  GaussLegendreRule() {
    // Newton iteration on P_N from the Chebyshev initial guess.
    for (int i = 0; i < (N + 1) / 2; ++i) {
      double z = std::cos(std::numbers::pi * (i + 0.75) / (N + 0.5));
      double dp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0;
        double p1 = 0.0;
        for (int j = 0; j < N; ++j) {
          const double p2 = p1;
          p1 = p0;
          p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
        }
        dp = N * (z * p0 - p1) / (z * z - 1.0);
        const double dz = p0 / dp;
        z -= dz;
        if (std::abs(dz) < 1e-16) break;
      }
      nodes[i] = -z;
      nodes[N - 1 - i] = z;
      weights[i] = weights[N - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
  }
};

template <int N>
const GaussLegendreRule<N>& gauss_legendre() {
  static const GaussLegendreRule<N> rule;
  return rule;
}

/// Sorted, deduplicated breakpoints clipped to [lo, hi], always including both ends.
inline std::vector<double> pieces(double lo, double hi, std::vector<double> breaks) {
  breaks.push_back(lo);
  breaks.push_back(hi);
  std::erase_if(breaks, [&](double b) { return b < lo || b > hi || !std::isfinite(b); });
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-14; }),
               breaks.end());
  return breaks;
}

}  // namespace detail

/// Composite 8-point Gauss-Legendre over [lo, hi]. The interval is split at
/// every breakpoint, then each piece into panels no wider than max_panel.
/// Integrands that are smooth between breakpoints converge to round-off.
template <class F>
double gauss_legendre(F&& f, double lo, double hi, const std::vector<double>& breaks,
                      double max_panel = 0.05) {
  if (!(hi > lo)) return 0.0;
  const auto& rule = detail::gauss_legendre<8>();
  const auto pts = detail::pieces(lo, hi, breaks);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
    const double a = pts[p];
    const double b = pts[p + 1];
    const auto panels = static_cast<long>(std::max(1.0, std::ceil((b - a) / max_panel)));
    const double width = (b - a) / static_cast<double>(panels);
    for (long k = 0; k < panels; ++k) {
      const double pa = a + width * static_cast<double>(k);
      const double mid = pa + 0.5 * width;
      double acc = 0.0;
      for (int i = 0; i < 8; ++i) acc += rule.weights[i] * f(mid + 0.5 * width * rule.nodes[i]);
      total += 0.5 * width * acc;
    }
  }
  return total;
}

/// Composite trapezoid rule with the same breakpoint splitting. Each piece is
/// sampled at a uniform step no larger than max_step.
template <class F>
double trapezoid(F&& f, double lo, double hi, const std::vector<double>& breaks,
                 double max_step = 1e-4) {
  if (!(hi > lo)) return 0.0;
  const auto pts = detail::pieces(lo, hi, breaks);
  double total = 0.0;
  for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
    const double a = pts[p];
    const double b = pts[p + 1];
    const auto steps = static_cast<long>(std::max(1.0, std::ceil((b - a) / max_step)));
    const double h = (b - a) / static_cast<double>(steps);
    // One-sided limits at the piece ends keep jump discontinuities out of the sum.
    const double eps = std::min(1e-12, 1e-3 * h);
    double acc = 0.5 * (f(a + eps) + f(b - eps));
    for (long k = 1; k < steps; ++k) acc += f(a + h * static_cast<double>(k));
    total += h * acc;
  }
  return total;
}

}  // namespace fbp::quad
