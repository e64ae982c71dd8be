#pragma once

// Event binning: exact primal pass with kernel k, and tangent/adjoint passes
// whose per-axis derivative rule is selected by GradMode.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fbp/error.hpp"
#include "fbp/kernels.hpp"

namespace fbp {

/// Bin j along an axis is centered at origin + j * delta.
struct FrameGrid {
  int width = 0;
  int height = 0;
  double delta = 0.0;
  double origin_x = 0.0;
  double origin_y = 0.0;

  std::size_t size() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  void validate() const {
    if (width < 1 || height < 1) throw Error(ErrorCode::InvalidGrid, "grid must be at least 1x1");
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw Error(ErrorCode::InvalidGrid, "bin spacing must be positive and finite");
    if (!std::isfinite(origin_x) || !std::isfinite(origin_y))
      throw Error(ErrorCode::InvalidGrid, "grid origin must be finite");
  }

  /// Grid of the given size whose bin centers are symmetric about (0, 0).
  static FrameGrid centered(int width, int height, double delta) {
    return {width, height, delta, -0.5 * (width - 1) * delta, -0.5 * (height - 1) * delta};
  }

  friend bool operator==(const FrameGrid&, const FrameGrid&) = default;
};

struct WeightedPoints {
  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ws;

  std::size_t size() const { return xs.size(); }

  void validate() const {
    if (xs.size() != ys.size() || xs.size() != ws.size())
      throw Error(ErrorCode::LengthMismatch, "point coordinate and weight lists differ in length");
    for (std::size_t i = 0; i < xs.size(); ++i)
      if (!std::isfinite(xs[i]) || !std::isfinite(ys[i]) || !std::isfinite(ws[i]))
        throw Error(ErrorCode::InvalidArgument, "non-finite point " + std::to_string(i));
  }
};

/// W x H values, stored row by row (index v * W + u).
struct Frame {
  FrameGrid grid;
  std::vector<double> values;

  Frame() = default;
  explicit Frame(const FrameGrid& g) : grid(g), values(g.size(), 0.0) {}

  double& at(int u, int v) { return values[static_cast<std::size_t>(v) * grid.width + u]; }
  double at(int u, int v) const { return values[static_cast<std::size_t>(v) * grid.width + u]; }
  std::size_t size() const { return values.size(); }

  double sum() const {
    double s = 0.0;
    for (double x : values) s += x;
    return s;
  }
};

/// Gradient pairs (d/dx', d/dy') per point.
struct PointGradients {
  std::vector<double> gx;
  std::vector<double> gy;
};

// ---------------------------------------------------------------------------
// Gradient modes

struct GradMode {
  enum class Kind { Naive, FBP, STE, Sigmoid };

  Kind kind = Kind::FBP;
  ReconKernelKind recon = ReconKernelKind::Linear;
  double slope = 10.0;

  static GradMode naive() { return {Kind::Naive}; }
  static GradMode fbp(ReconKernelKind l = ReconKernelKind::Linear) { return {Kind::FBP, l}; }
  static GradMode ste() { return {Kind::STE}; }
  static GradMode sigmoid(double slope = 10.0) {
    return {Kind::Sigmoid, ReconKernelKind::Linear, slope};
  }

  std::string name() const {
    switch (kind) {
      case Kind::Naive: return "naive";
      case Kind::FBP: return "fbp-" + std::string(to_string(recon));
      case Kind::STE: return "ste";
      case Kind::Sigmoid: return "sigmoid";
    }
    return "?";
  }

  friend bool operator==(const GradMode&, const GradMode&) = default;
};

inline double ste_derivative(double x) { return std::abs(x) < 1.0 ? -detail::sgn(x) : 0.0; }

inline double sigmoid_prime(double x) {
  const double e = std::exp(-std::abs(x));
  return e / ((1.0 + e) * (1.0 + e));
}

/// sigma'(s (x + 1/2)) - sigma'(s (x - 1/2)), cut to zero where both terms
/// are below 1e-17.
inline double sigmoid_surrogate_derivative(double x, double slope) {
  if (std::abs(x) >= 0.5 + 40.0 / slope) return 0.0;
  return sigmoid_prime(slope * (x + 0.5)) - sigmoid_prime(slope * (x - 0.5));
}

/// Per-axis value/derivative pair used by the tangent and adjoint passes.
/// Naive: (k, k'). FBP(l): (kappa, kappa'). STE and Sigmoid: kappa of
/// FBP-Linear on the cross axis, surrogate derivative on the differentiated axis.
class AxisRule {
 public:
  AxisRule(BinningKernelKind k, const GradMode& mode) : k_(k), mode_(mode) {
    if (mode.kind == GradMode::Kind::Sigmoid && !(mode.slope > 0.0))
      throw Error(ErrorCode::InvalidArgument, "sigmoid slope must be positive");
    if (mode.kind != GradMode::Kind::Naive) {
      const auto l = mode.kind == GradMode::Kind::FBP ? mode.recon : ReconKernelKind::Linear;
      kappa_ = synthesize_kappa(k, l);
    }
    switch (mode.kind) {
      case GradMode::Kind::Naive: radius_ = support_radius(k); break;
      case GradMode::Kind::FBP: radius_ = kappa_.support_radius(); break;
      case GradMode::Kind::STE: radius_ = std::max(kappa_.support_radius(), 1.0); break;
      case GradMode::Kind::Sigmoid:
        radius_ = std::max(kappa_.support_radius(), 0.5 + 40.0 / mode.slope);
        break;
    }
  }

  double value(double x) const {
    return mode_.kind == GradMode::Kind::Naive ? eval_binning_kernel(k_, x) : kappa_.value(x);
  }

  double derivative(double x) const {
    switch (mode_.kind) {
      case GradMode::Kind::Naive: return eval_binning_kernel_derivative(k_, x);
      case GradMode::Kind::FBP: return kappa_.derivative(x);
      case GradMode::Kind::STE: return ste_derivative(x);
      case GradMode::Kind::Sigmoid: return sigmoid_surrogate_derivative(x, mode_.slope);
    }
    return 0.0;
  }

  double radius() const { return radius_; }
  BinningKernelKind binning_kind() const { return k_; }
  const GradMode& mode() const { return mode_; }

 private:
  BinningKernelKind k_;
  GradMode mode_;
  SynthesizedKernel kappa_;
  double radius_ = 0.0;
};

namespace detail {

/// Bins [lo, hi] whose normalized distance to center c is within radius.
struct BinRange {
  int lo = 0;
  int hi = -1;
};

inline BinRange bin_range(double c, double radius, int count) {
  const double lo = std::ceil(c - radius);
  const double hi = std::floor(c + radius);
  BinRange r;
  r.lo = lo < 0.0 ? 0 : (lo > count ? count : static_cast<int>(lo));
  r.hi = hi >= count ? count - 1 : (hi < -1.0 ? -1 : static_cast<int>(hi));
  return r;
}

inline void require_same_shape(const Frame& f, const FrameGrid& grid) {
  if (f.grid.width != grid.width || f.grid.height != grid.height || f.values.size() != grid.size())
    throw Error(ErrorCode::ShapeMismatch, "frame shape does not match the grid");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Generic passes. Rule must provide value(x), derivative(x), radius().

template <class Kernel>
Frame bin_forward_with(const WeightedPoints& pts, const FrameGrid& grid, const Kernel& kernel,
                       double radius) {
  grid.validate();
  pts.validate();
  Frame out(grid);
  std::vector<double> fx, fy;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double cx = (pts.xs[i] - grid.origin_x) / grid.delta;
    const double cy = (pts.ys[i] - grid.origin_y) / grid.delta;
    const auto rx = detail::bin_range(cx, radius, grid.width);
    const auto ry = detail::bin_range(cy, radius, grid.height);
    if (rx.hi < rx.lo || ry.hi < ry.lo) continue;
    fx.clear();
    fy.clear();
    for (int u = rx.lo; u <= rx.hi; ++u) fx.push_back(kernel(cx - u));
    for (int v = ry.lo; v <= ry.hi; ++v) fy.push_back(kernel(cy - v));
    for (int v = ry.lo; v <= ry.hi; ++v) {
      const double wy = pts.ws[i] * fy[v - ry.lo];
      if (wy == 0.0) continue;
      for (int u = rx.lo; u <= rx.hi; ++u) out.at(u, v) += wy * fx[u - rx.lo];
    }
  }
  return out;
}

template <class Rule>
Frame bin_jvp_with(const WeightedPoints& pts, const std::vector<double>& xdot,
                   const std::vector<double>& ydot, const FrameGrid& grid, const Rule& rule) {
  grid.validate();
  pts.validate();
  if (xdot.size() != pts.size() || ydot.size() != pts.size())
    throw Error(ErrorCode::LengthMismatch, "tangents must match the number of points");
  Frame out(grid);
  const double inv_delta = 1.0 / grid.delta;
  const double radius = rule.radius();
  std::vector<double> gx, dgx, gy, dgy;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double cx = (pts.xs[i] - grid.origin_x) / grid.delta;
    const double cy = (pts.ys[i] - grid.origin_y) / grid.delta;
    const auto rx = detail::bin_range(cx, radius, grid.width);
    const auto ry = detail::bin_range(cy, radius, grid.height);
    if (rx.hi < rx.lo || ry.hi < ry.lo) continue;
    gx.clear(), dgx.clear(), gy.clear(), dgy.clear();
    for (int u = rx.lo; u <= rx.hi; ++u) {
      gx.push_back(rule.value(cx - u));
      dgx.push_back(rule.derivative(cx - u) * inv_delta);
    }
    for (int v = ry.lo; v <= ry.hi; ++v) {
      gy.push_back(rule.value(cy - v));
      dgy.push_back(rule.derivative(cy - v) * inv_delta);
    }
    const double w = pts.ws[i];
    for (int v = ry.lo; v <= ry.hi; ++v) {
      const std::size_t jv = v - ry.lo;
      for (int u = rx.lo; u <= rx.hi; ++u) {
        const std::size_t ju = u - rx.lo;
        out.at(u, v) += w * (dgx[ju] * gy[jv] * xdot[i] + gx[ju] * dgy[jv] * ydot[i]);
      }
    }
  }
  return out;
}

template <class Rule>
PointGradients bin_vjp_with(const WeightedPoints& pts, const Frame& adjoint,
                            const FrameGrid& grid, const Rule& rule) {
  grid.validate();
  pts.validate();
  detail::require_same_shape(adjoint, grid);
  PointGradients out{std::vector<double>(pts.size(), 0.0), std::vector<double>(pts.size(), 0.0)};
  const double inv_delta = 1.0 / grid.delta;
  const double radius = rule.radius();
  std::vector<double> gx, dgx, gy, dgy;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double cx = (pts.xs[i] - grid.origin_x) / grid.delta;
    const double cy = (pts.ys[i] - grid.origin_y) / grid.delta;
    const auto rx = detail::bin_range(cx, radius, grid.width);
    const auto ry = detail::bin_range(cy, radius, grid.height);
    if (rx.hi < rx.lo || ry.hi < ry.lo) continue;
    gx.clear(), dgx.clear(), gy.clear(), dgy.clear();
    for (int u = rx.lo; u <= rx.hi; ++u) {
      gx.push_back(rule.value(cx - u));
      dgx.push_back(rule.derivative(cx - u) * inv_delta);
    }
    for (int v = ry.lo; v <= ry.hi; ++v) {
      gy.push_back(rule.value(cy - v));
      dgy.push_back(rule.derivative(cy - v) * inv_delta);
    }
    double sx = 0.0, sy = 0.0;
    for (int v = ry.lo; v <= ry.hi; ++v) {
      const std::size_t jv = v - ry.lo;
      for (int u = rx.lo; u <= rx.hi; ++u) {
        const std::size_t ju = u - rx.lo;
        const double a = adjoint.at(u, v);
        sx += a * dgx[ju] * gy[jv];
        sy += a * gx[ju] * dgy[jv];
      }
    }
    out.gx[i] = pts.ws[i] * sx;
    out.gy[i] = pts.ws[i] * sy;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Kernel-kind entry points

/// Primal pass. Contributions that land outside [0, W) x [0, H) are dropped.
inline Frame bin_forward(const WeightedPoints& pts, const FrameGrid& grid, BinningKernelKind k) {
  return bin_forward_with(
      pts, grid, [k](double d) { return eval_binning_kernel(k, d); }, support_radius(k));
}

inline Frame bin_jvp(const WeightedPoints& pts, const std::vector<double>& xdot,
                     const std::vector<double>& ydot, const FrameGrid& grid, const AxisRule& rule) {
  return bin_jvp_with(pts, xdot, ydot, grid, rule);
}

inline Frame bin_jvp(const WeightedPoints& pts, const std::vector<double>& xdot,
                     const std::vector<double>& ydot, const FrameGrid& grid, BinningKernelKind k,
                     const GradMode& mode) {
  return bin_jvp_with(pts, xdot, ydot, grid, AxisRule(k, mode));
}

inline PointGradients bin_vjp(const WeightedPoints& pts, const Frame& adjoint,
                              const FrameGrid& grid, const AxisRule& rule) {
  return bin_vjp_with(pts, adjoint, grid, rule);
}

inline PointGradients bin_vjp(const WeightedPoints& pts, const Frame& adjoint,
                              const FrameGrid& grid, BinningKernelKind k, const GradMode& mode) {
  return bin_vjp_with(pts, adjoint, grid, AxisRule(k, mode));
}

// ---------------------------------------------------------------------------
// 1D binning, h_j = sum_i w_i k((x_i - origin - j delta) / delta)

struct Grid1D {
  int width = 0;
  double delta = 0.0;
  double origin = 0.0;

  void validate() const {
    if (width < 1) throw Error(ErrorCode::InvalidGrid, "grid must have at least one bin");
    if (!(delta > 0.0) || !std::isfinite(delta))
      throw Error(ErrorCode::InvalidGrid, "bin spacing must be positive and finite");
  }
};

namespace detail {

inline void validate_1d(const std::vector<double>& xs, const std::vector<double>& ws) {
  if (xs.size() != ws.size())
    throw Error(ErrorCode::LengthMismatch, "coordinate and weight lists differ in length");
}

}  // namespace detail

inline std::vector<double> bin_forward_1d(const std::vector<double>& xs,
                                          const std::vector<double>& ws, const Grid1D& grid,
                                          BinningKernelKind k) {
  grid.validate();
  detail::validate_1d(xs, ws);
  std::vector<double> h(grid.width, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double c = (xs[i] - grid.origin) / grid.delta;
    const auto r = detail::bin_range(c, support_radius(k), grid.width);
    for (int j = r.lo; j <= r.hi; ++j) h[j] += ws[i] * eval_binning_kernel(k, c - j);
  }
  return h;
}

template <class Rule>
std::vector<double> bin_jvp_1d(const std::vector<double>& xs, const std::vector<double>& ws,
                               const std::vector<double>& xdot, const Grid1D& grid,
                               const Rule& rule) {
  grid.validate();
  detail::validate_1d(xs, ws);
  if (xdot.size() != xs.size())
    throw Error(ErrorCode::LengthMismatch, "tangents must match the number of points");
  std::vector<double> h(grid.width, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double c = (xs[i] - grid.origin) / grid.delta;
    const auto r = detail::bin_range(c, rule.radius(), grid.width);
    for (int j = r.lo; j <= r.hi; ++j)
      h[j] += ws[i] * rule.derivative(c - j) / grid.delta * xdot[i];
  }
  return h;
}

template <class Rule>
std::vector<double> bin_vjp_1d(const std::vector<double>& xs, const std::vector<double>& ws,
                               const std::vector<double>& adjoint, const Grid1D& grid,
                               const Rule& rule) {
  grid.validate();
  detail::validate_1d(xs, ws);
  if (adjoint.size() != static_cast<std::size_t>(grid.width))
    throw Error(ErrorCode::ShapeMismatch, "adjoint length does not match the grid");
  std::vector<double> g(xs.size(), 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double c = (xs[i] - grid.origin) / grid.delta;
    const auto r = detail::bin_range(c, rule.radius(), grid.width);
    double s = 0.0;
    for (int j = r.lo; j <= r.hi; ++j) s += adjoint[j] * rule.derivative(c - j);
    g[i] = ws[i] * s / grid.delta;
  }
  return g;
}

}  // namespace fbp
