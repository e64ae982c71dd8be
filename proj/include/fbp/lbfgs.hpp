#pragma once

// Unbounded L-BFGS minimizer with a strong-Wolfe line search.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <deque>
#include <string_view>
#include <vector>

namespace fbp {

struct LbfgsOptions {
  int history = 10;
  int max_iter = 100;
  double grad_tol = 1e-6;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_evals = 25;
};

enum class StopReason { GradientTolerance, MaxIterations, LineSearchFailure };

inline std::string_view to_string(StopReason r) {
  switch (r) {
    case StopReason::GradientTolerance: return "gradient_tolerance";
    case StopReason::MaxIterations: return "max_iterations";
    case StopReason::LineSearchFailure: return "line_search_failure";
  }
  return "?";
}

template <std::size_t N>
struct Iterate {
  std::array<double, N> theta{};
  double value = 0.0;
  double grad_norm = 0.0;
  double seconds = 0.0;
};

template <std::size_t N>
struct OptTrace {
  std::vector<Iterate<N>> iterates;
  bool converged = false;
  StopReason reason = StopReason::MaxIterations;
  int evaluations = 0;
};

template <std::size_t N>
struct OptResult {
  std::array<double, N> theta{};
  OptTrace<N> trace;
};

namespace detail {

template <std::size_t N>
double dot(const std::array<double, N>& a, const std::array<double, N>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += a[i] * b[i];
  return s;
}

template <std::size_t N>
std::array<double, N> axpy(const std::array<double, N>& x, double a, const std::array<double, N>& d) {
  std::array<double, N> out;
  for (std::size_t i = 0; i < N; ++i) out[i] = x[i] + a * d[i];
  return out;
}

template <std::size_t N>
struct Sample {
  double alpha = 0.0;
  double f = 0.0;
  double slope = 0.0;
  std::array<double, N> x{};
  std::array<double, N> g{};
};

// Minimizer of the cubic through (a, fa, da) and (b, fb, db), kept inside
// the interior of [a, b]; falls back to bisection.
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double d1 = da + db - 3.0 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  if (disc >= 0.0) {
    const double d2 = (b > a ? 1.0 : -1.0) * std::sqrt(disc);
    const double t = b - (b - a) * (db + d2 - d1) / (db - da + 2.0 * d2);
    const double margin = 0.1 * (hi - lo);
    if (std::isfinite(t) && t > lo + margin && t < hi - margin) return t;
  }
  return 0.5 * (a + b);
}

}  // namespace detail

/// Minimizes f. fg(x, g) returns f(x) and writes the gradient into g.
/// The first step runs along the unit steepest-descent direction; later
/// steps use the two-loop recursion with the usual s'y / y'y scaling. All
/// trial steps start at alpha = 1. A failed search drops the history once
/// and retries along steepest descent.
template <std::size_t N, class FG>
OptResult<N> lbfgs_minimize(FG&& fg, std::array<double, N> x0, const LbfgsOptions& opts = {}) {
  using Vec = std::array<double, N>;
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  OptResult<N> res;
  auto& trace = res.trace;
  Vec x = x0, g{};
  double f = fg(x, g);
  ++trace.evaluations;
  trace.iterates.push_back({x, f, std::sqrt(detail::dot(g, g)), elapsed()});

  std::deque<Vec> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0;; ++iter) {
    const double gnorm = std::sqrt(detail::dot(g, g));
    if (!(gnorm > opts.grad_tol)) {
      trace.reason = StopReason::GradientTolerance;
      trace.converged = true;
      break;
    }
    if (iter >= opts.max_iter) {
      trace.reason = StopReason::MaxIterations;
      break;
    }

    // Two-loop recursion.
    Vec d;
    if (s_hist.empty()) {
      for (std::size_t i = 0; i < N; ++i) d[i] = -g[i] / gnorm;
    } else {
      Vec q = g;
      std::vector<double> alpha(s_hist.size());
      for (std::size_t k = s_hist.size(); k-- > 0;) {
        alpha[k] = rho_hist[k] * detail::dot(s_hist[k], q);
        q = detail::axpy(q, -alpha[k], y_hist[k]);
      }
      const double gamma = detail::dot(s_hist.back(), y_hist.back()) /
                           detail::dot(y_hist.back(), y_hist.back());
      for (auto& qi : q) qi *= gamma;
      for (std::size_t k = 0; k < s_hist.size(); ++k) {
        const double beta = rho_hist[k] * detail::dot(y_hist[k], q);
        q = detail::axpy(q, alpha[k] - beta, s_hist[k]);
      }
      for (std::size_t i = 0; i < N; ++i) d[i] = -q[i];
    }
    double slope0 = detail::dot(g, d);
    if (!(slope0 < 0.0)) {
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
      for (std::size_t i = 0; i < N; ++i) d[i] = -g[i] / gnorm;
      slope0 = -gnorm;
    }

    // Strong-Wolfe search: bracketing phase then zoom.
    detail::Sample<N> prev{0.0, f, slope0, x, g};
    detail::Sample<N> best = prev;
    bool found = false;
    detail::Sample<N> accepted;
    auto evaluate = [&](double alpha) {
      detail::Sample<N> s;
      s.alpha = alpha;
      s.x = detail::axpy(x, alpha, d);
      s.f = fg(s.x, s.g);
      s.slope = detail::dot(s.g, d);
      ++trace.evaluations;
      if (s.f <= f + opts.c1 * alpha * slope0 && s.f < best.f) best = s;
      return s;
    };
    auto armijo = [&](const detail::Sample<N>& s) {
      return std::isfinite(s.f) && s.f <= f + opts.c1 * s.alpha * slope0;
    };
    auto curvature = [&](const detail::Sample<N>& s) {
      return std::abs(s.slope) <= -opts.c2 * slope0;
    };
    auto zoom = [&](detail::Sample<N> lo, detail::Sample<N> hi, int budget) {
      for (; budget > 0; --budget) {
        const double a = detail::cubic_step(lo.alpha, lo.f, lo.slope, hi.alpha, hi.f, hi.slope);
        const auto s = evaluate(a);
        if (!armijo(s) || s.f >= lo.f) {
          hi = s;
        } else {
          if (curvature(s)) {
            accepted = s;
            found = true;
            return;
          }
          if (s.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
          lo = s;
        }
        if (std::abs(hi.alpha - lo.alpha) < 1e-14 * std::max(1.0, std::abs(lo.alpha))) return;
      }
    };

    double alpha = 1.0;
    int budget = opts.max_line_evals;
    for (int k = 0; k < opts.max_line_evals && !found && budget > 0; ++k) {
      const auto s = evaluate(alpha);
      --budget;
      if (!armijo(s) || (k > 0 && s.f >= prev.f)) {
        zoom(prev, s, budget);
        break;
      }
      if (curvature(s)) {
        accepted = s;
        found = true;
        break;
      }
      if (s.slope >= 0.0) {
        zoom(s, prev, budget);
        break;
      }
      prev = s;
      alpha *= 2.0;
    }

    if (!found) {
      // Keep progress from a sufficient-decrease point even without curvature.
      if (best.alpha > 0.0) {
        accepted = best;
      } else if (!s_hist.empty()) {
        // Restart from steepest descent before giving up.
        s_hist.clear(), y_hist.clear(), rho_hist.clear();
        continue;
      } else {
        trace.reason = StopReason::LineSearchFailure;
        break;
      }
    }

    Vec s, y;
    for (std::size_t i = 0; i < N; ++i) {
      s[i] = accepted.x[i] - x[i];
      y[i] = accepted.g[i] - g[i];
    }
    const double sy = detail::dot(s, y);
    if (sy > 1e-12 * std::sqrt(detail::dot(s, s) * detail::dot(y, y))) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.history) {
        s_hist.pop_front(), y_hist.pop_front(), rho_hist.pop_front();
      }
    }
    x = accepted.x;
    f = accepted.f;
    g = accepted.g;
    trace.iterates.push_back({x, f, std::sqrt(detail::dot(g, g)), elapsed()});
  }
  res.theta = x;
  return res;
}

/// Maximizes f by minimizing -f. Trace values and gradient norms refer to f.
template <std::size_t N, class FG>
OptResult<N> lbfgs_maximize_fn(FG&& fg, std::array<double, N> x0, const LbfgsOptions& opts = {}) {
  auto neg = [&](const std::array<double, N>& x, std::array<double, N>& g) {
    const double v = fg(x, g);
    for (auto& gi : g) gi = -gi;
    return -v;
  };
  auto res = lbfgs_minimize<N>(neg, x0, opts);
  for (auto& it : res.trace.iterates) it.value = -it.value;
  return res;
}

}  // namespace fbp
