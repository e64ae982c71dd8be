#pragma once

// Binning kernels k, reconstruction kernels l, and the synthesized kernel
// kappa = l * k whose derivative replaces k' in the backward pass.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "fbp/quadrature.hpp"

namespace fbp {

enum class BinningKernelKind { Rect, Linear, GaussTrunc };
enum class ReconKernelKind { Linear, Cubic, Lanczos };

inline std::string_view to_string(BinningKernelKind k) {
  switch (k) {
    case BinningKernelKind::Rect: return "rect";
    case BinningKernelKind::Linear: return "linear";
    case BinningKernelKind::GaussTrunc: return "gauss";
  }
  return "?";
}

inline std::string_view to_string(ReconKernelKind l) {
  switch (l) {
    case ReconKernelKind::Linear: return "linear";
    case ReconKernelKind::Cubic: return "cubic";
    case ReconKernelKind::Lanczos: return "lanczos";
  }
  return "?";
}

namespace detail {

inline double sgn(double x) { return (x > 0.0) - (x < 0.0); }

inline double std_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

// Normalized sinc and its derivative, with series near the removable singularity.
inline double sinc(double x) {
  const double px = std::numbers::pi * x;
  if (std::abs(x) < 1e-4) return 1.0 - px * px / 6.0 + px * px * px * px / 120.0;
  return std::sin(px) / px;
}

inline double sinc_prime(double x) {
  constexpr double pi = std::numbers::pi;
  if (std::abs(x) < 1e-4) return -pi * pi * x / 3.0 + pi * pi * pi * pi * x * x * x / 30.0;
  const double px = pi * x;
  return (px * std::cos(px) - std::sin(px)) / (pi * x * x);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Binning kernels

constexpr double support_radius(BinningKernelKind k) {
  switch (k) {
    case BinningKernelKind::Rect: return 0.5;
    case BinningKernelKind::Linear: return 1.0;
    case BinningKernelKind::GaussTrunc: return 1.5;
  }
  return 0.0;
}

inline double eval_binning_kernel(BinningKernelKind k, double x) {
  const double a = std::abs(x);
  switch (k) {
    case BinningKernelKind::Rect: return a < 0.5 ? 1.0 : 0.0;
    case BinningKernelKind::Linear: return a < 1.0 ? 1.0 - a : 0.0;
    case BinningKernelKind::GaussTrunc: return a < 1.5 ? detail::std_normal_pdf(x) : 0.0;
  }
  return 0.0;
}

/// Pointwise derivative k'(x) where it exists; 0 at the jumps of rect and
/// truncated gauss, and at the peak of linear.
inline double eval_binning_kernel_derivative(BinningKernelKind k, double x) {
  const double a = std::abs(x);
  switch (k) {
    case BinningKernelKind::Rect: return 0.0;
    case BinningKernelKind::Linear: return a < 1.0 ? -detail::sgn(x) : 0.0;
    case BinningKernelKind::GaussTrunc: return a < 1.5 ? -x * detail::std_normal_pdf(x) : 0.0;
  }
  return 0.0;
}

/// Exact integral of k over the real line.
inline double binning_kernel_mass(BinningKernelKind k) {
  switch (k) {
    case BinningKernelKind::Rect: return 1.0;
    case BinningKernelKind::Linear: return 1.0;
    case BinningKernelKind::GaussTrunc: return std::erf(1.5 / std::numbers::sqrt2);
  }
  return 0.0;
}

inline std::vector<double> breakpoints(BinningKernelKind k) {
  switch (k) {
    case BinningKernelKind::Rect: return {-0.5, 0.5};
    case BinningKernelKind::Linear: return {-1.0, 0.0, 1.0};
    case BinningKernelKind::GaussTrunc: return {-1.5, 1.5};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Reconstruction kernels (raw, unnormalized)

constexpr double support_radius(ReconKernelKind l) {
  switch (l) {
    case ReconKernelKind::Linear: return 1.0;
    case ReconKernelKind::Cubic: return 2.0;
    case ReconKernelKind::Lanczos: return 2.0;
  }
  return 0.0;
}

inline double eval_recon_kernel(ReconKernelKind l, double x) {
  const double a = std::abs(x);
  switch (l) {
    case ReconKernelKind::Linear: return a < 1.0 ? 1.0 - a : 0.0;
    case ReconKernelKind::Cubic:
      if (a < 1.0) return 1.5 * a * a * a - 2.5 * a * a + 1.0;
      if (a <= 2.0) return 2.5 * a * a - 0.5 * a * a * a - 4.0 * a + 2.0;
      return 0.0;
    case ReconKernelKind::Lanczos:
      return a <= 2.0 ? detail::sinc(x) * detail::sinc(0.5 * x) : 0.0;
  }
  return 0.0;
}

inline double eval_recon_kernel_derivative(ReconKernelKind l, double x) {
  const double a = std::abs(x);
  const double s = detail::sgn(x);
  switch (l) {
    case ReconKernelKind::Linear: return a < 1.0 ? -s : 0.0;
    case ReconKernelKind::Cubic:
      if (a < 1.0) return s * (4.5 * a * a - 5.0 * a);
      if (a <= 2.0) return s * (5.0 * a - 1.5 * a * a - 4.0);
      return 0.0;
    case ReconKernelKind::Lanczos:
      if (a > 2.0) return 0.0;
      return detail::sinc_prime(x) * detail::sinc(0.5 * x) +
             0.5 * detail::sinc(x) * detail::sinc_prime(0.5 * x);
  }
  return 0.0;
}

inline std::vector<double> breakpoints(ReconKernelKind l) {
  switch (l) {
    case ReconKernelKind::Linear: return {-1.0, 0.0, 1.0};
    case ReconKernelKind::Cubic: return {-2.0, -1.0, 0.0, 1.0, 2.0};
    case ReconKernelKind::Lanczos: return {-2.0, 0.0, 2.0};
  }
  return {};
}

/// Integral of the raw reconstruction kernel. Linear and Cubic are exactly 1.
inline double recon_kernel_raw_mass(ReconKernelKind l) {
  if (l != ReconKernelKind::Lanczos) return 1.0;
  static const double mass = quad::gauss_legendre(
      [](double x) { return eval_recon_kernel(ReconKernelKind::Lanczos, x); }, -2.0, 2.0,
      breakpoints(ReconKernelKind::Lanczos), 0.01);
  return mass;
}

// ---------------------------------------------------------------------------
// Synthesized kernel kappa = l * k

struct SynthesisOptions {
  bool force_tabulated = false;
  /// Divide Lanczos by its numeric mass so that it integrates to one.
  bool normalize_lanczos = true;
  double table_step = 1e-3;
};

namespace detail {

inline double kappa_rect_linear(double a) {
  if (a < 0.5) return 0.75 - a * a;
  if (a < 1.5) return 0.125 * (3.0 - 2.0 * a) * (3.0 - 2.0 * a);
  return 0.0;
}

inline double kappa_rect_linear_prime(double a) {
  if (a < 0.5) return -2.0 * a;
  if (a < 1.5) return -0.5 * (3.0 - 2.0 * a);
  return 0.0;
}

inline double kappa_linear_linear(double a) {
  if (a < 1.0) return (4.0 + 3.0 * (a - 2.0) * a * a) / 6.0;
  if (a < 2.0) return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
  return 0.0;
}

inline double kappa_linear_linear_prime(double a) {
  if (a < 1.0) return -2.0 * a + 1.5 * a * a;
  if (a < 2.0) return -0.5 * (2.0 - a) * (2.0 - a);
  return 0.0;
}

// Closed form for |x|; the printed third branch only holds for x >= 0.
inline double kappa_gauss_linear(double a) {
  constexpr double r2 = std::numbers::sqrt2;
  const double sqrt_2pi = std::sqrt(2.0 * std::numbers::pi);
  const double sqrt_2_over_pi = std::sqrt(2.0 / std::numbers::pi);
  const double e_trunc = std::erf(1.5 / r2);
  const double e98 = std::exp(9.0 / 8.0);
  if (a < 0.5) {
    return 0.5 * (a - 1.0) * std::erf((a - 1.0) / r2) - a * std::erf(a / r2) +
           0.5 * (a + 1.0) * std::erf((a + 1.0) / r2) +
           std::exp(-0.5 * (a + 1.0) * (a + 1.0)) *
               (std::exp(2.0 * a) - 2.0 * std::exp(a + 0.5) + 1.0) / sqrt_2pi;
  }
  if (a < 1.5) {
    return 0.5 * ((a - 1.0) * std::erf((a - 1.0) / r2) - 2.0 * a * std::erf(a / r2) +
                  e_trunc * a + e_trunc - 2.0 * sqrt_2_over_pi * std::exp(-0.5 * a * a) +
                  sqrt_2_over_pi * std::exp(-0.5 * (a - 1.0) * (a - 1.0)) +
                  sqrt_2_over_pi / e98);
  }
  if (a < 2.5) {
    return 0.5 * (a - 1.0) * std::erf((a - 1.0) / r2) - 0.5 * e_trunc * (a - 1.0) +
           std::exp(-0.5 * (a - 1.0) * (a - 1.0)) / sqrt_2pi - 1.0 / (e98 * sqrt_2pi);
  }
  return 0.0;
}

// Second difference of the truncated-Gaussian CDF (the derivative of
// triangle * gauss_trunc).
inline double kappa_gauss_linear_prime(double a) {
  if (a >= 2.5) return 0.0;
  const auto cdf = [](double t) {
    const double c = std::clamp(t, -1.5, 1.5);
    return std_normal_cdf(c) - std_normal_cdf(-1.5);
  };
  return cdf(a + 1.0) - 2.0 * cdf(a) + cdf(a - 1.0);
}

struct KappaTable {
  double step = 0.0;
  std::vector<double> values;
  std::vector<double> slopes;
};

}  // namespace detail

class SynthesizedKernel {
 public:
  enum class Form { ClosedForm, Tabulated };

  BinningKernelKind binning_kind() const { return k_; }
  ReconKernelKind recon_kind() const { return l_; }
  Form form() const { return form_; }
  bool is_closed_form() const { return form_ == Form::ClosedForm; }
  double support_radius() const { return radius_; }
  /// Factor applied to the raw reconstruction kernel (1/mass for normalized Lanczos).
  double recon_scale() const { return recon_scale_; }
  double table_step() const { return table_ ? table_->step : 0.0; }

  double value(double x) const {
    const double a = std::abs(x);
    if (!(a < radius_)) return 0.0;
    if (form_ == Form::Tabulated) return hermite(a, false);
    switch (k_) {
      case BinningKernelKind::Rect: return detail::kappa_rect_linear(a);
      case BinningKernelKind::Linear: return detail::kappa_linear_linear(a);
      case BinningKernelKind::GaussTrunc: return detail::kappa_gauss_linear(a);
    }
    return 0.0;
  }

  double derivative(double x) const {
    const double a = std::abs(x);
    if (!(a < radius_)) return 0.0;
    const double s = detail::sgn(x);
    if (form_ == Form::Tabulated) return s * hermite(a, true);
    switch (k_) {
      case BinningKernelKind::Rect: return s * detail::kappa_rect_linear_prime(a);
      case BinningKernelKind::Linear: return s * detail::kappa_linear_linear_prime(a);
      case BinningKernelKind::GaussTrunc: return s * detail::kappa_gauss_linear_prime(a);
    }
    return 0.0;
  }

  /// Points where kappa may fail to be smooth: Minkowski sum of the k and l breakpoints.
  std::vector<double> breakpoints() const {
    std::vector<double> out;
    for (double bk : fbp::breakpoints(k_))
      for (double bl : fbp::breakpoints(l_))
        if (std::abs(bk + bl) <= radius_) out.push_back(bk + bl);
    out.push_back(-radius_);
    out.push_back(radius_);
    return out;
  }

 private:
  friend SynthesizedKernel synthesize_kappa(BinningKernelKind, ReconKernelKind,
                                            const SynthesisOptions&);

  // Cubic Hermite interpolation on a >= 0 between tabulated values and slopes.
  double hermite(double a, bool want_derivative) const {
    const auto& t = *table_;
    const std::size_t last = t.values.size() - 1;
    auto i = static_cast<std::size_t>(a / t.step);
    if (i >= last) i = last - 1;
    const double u = a / t.step - static_cast<double>(i);
    const double y0 = t.values[i], y1 = t.values[i + 1];
    const double m0 = t.slopes[i] * t.step, m1 = t.slopes[i + 1] * t.step;
    if (!want_derivative) {
      const double u2 = u * u, u3 = u2 * u;
      return (2 * u3 - 3 * u2 + 1) * y0 + (u3 - 2 * u2 + u) * m0 + (-2 * u3 + 3 * u2) * y1 +
             (u3 - u2) * m1;
    }
    const double u2 = u * u;
    return ((6 * u2 - 6 * u) * y0 + (3 * u2 - 4 * u + 1) * m0 + (-6 * u2 + 6 * u) * y1 +
            (3 * u2 - 2 * u) * m1) /
           t.step;
  }

  BinningKernelKind k_ = BinningKernelKind::Rect;
  ReconKernelKind l_ = ReconKernelKind::Linear;
  Form form_ = Form::ClosedForm;
  double radius_ = 1.5;
  double recon_scale_ = 1.0;
  std::shared_ptr<const detail::KappaTable> table_;
};

namespace detail {

// kappa(x) = \int k(z) l(x - z) dz and kappa'(x) = \int k(z) l'(x - z) dz,
// split at every kink of both factors.
inline double convolve_gl(BinningKernelKind k, ReconKernelKind l, double scale, double x,
                          bool derivative) {
  std::vector<double> breaks = fbp::breakpoints(k);
  for (double b : fbp::breakpoints(l)) breaks.push_back(x - b);
  const double rk = support_radius(k);
  return scale * quad::gauss_legendre(
                     [&](double z) {
                       const double lz = derivative ? eval_recon_kernel_derivative(l, x - z)
                                                    : eval_recon_kernel(l, x - z);
                       return eval_binning_kernel(k, z) * lz;
                     },
                     -rk, rk, breaks, 0.05);
}

}  // namespace detail

/// Builds kappa = l * k. Pairs with l = Linear use the closed forms; every
/// other pair (or force_tabulated) is tabulated on x >= 0 at table_step with
/// exact values and slopes, and interpolated by cubic Hermite.
inline SynthesizedKernel synthesize_kappa(BinningKernelKind k, ReconKernelKind l,
                                          const SynthesisOptions& opts = {}) {
  SynthesizedKernel sk;
  sk.k_ = k;
  sk.l_ = l;
  sk.radius_ = support_radius(k) + support_radius(l);
  sk.recon_scale_ =
      (l == ReconKernelKind::Lanczos && opts.normalize_lanczos) ? 1.0 / recon_kernel_raw_mass(l)
                                                                : 1.0;
  if (l == ReconKernelKind::Linear && !opts.force_tabulated) {
    sk.form_ = SynthesizedKernel::Form::ClosedForm;
    return sk;
  }
  sk.form_ = SynthesizedKernel::Form::Tabulated;
  auto table = std::make_shared<detail::KappaTable>();
  const auto n = static_cast<std::size_t>(std::llround(sk.radius_ / opts.table_step));
  table->step = sk.radius_ / static_cast<double>(n);
  table->values.resize(n + 1);
  table->slopes.resize(n + 1);
  for (std::size_t i = 0; i <= n; ++i) {
    const double x = table->step * static_cast<double>(i);
    table->values[i] = detail::convolve_gl(k, l, sk.recon_scale_, x, false);
    table->slopes[i] = i == 0 ? 0.0 : detail::convolve_gl(k, l, sk.recon_scale_, x, true);
  }
  table->values[n] = 0.0;
  table->slopes[n] = 0.0;
  sk.table_ = std::move(table);
  return sk;
}

inline double eval_kappa(const SynthesizedKernel& sk, double x) { return sk.value(x); }
inline double eval_kappa_prime(const SynthesizedKernel& sk, double x) { return sk.derivative(x); }

/// Independent route to kappa: composite trapezoid of \int l(y) k(x - y) dy
/// at the given step, split at the kinks of both kernels. Intended for tests.
inline std::vector<double> numeric_convolve_oracle(BinningKernelKind k, ReconKernelKind l,
                                                   std::span<const double> xs,
                                                   double step = 1e-4,
                                                   bool normalize_lanczos = true) {
  const double scale = (l == ReconKernelKind::Lanczos && normalize_lanczos)
                           ? 1.0 / recon_kernel_raw_mass(l)
                           : 1.0;
  const double rl = support_radius(l);
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    std::vector<double> breaks = fbp::breakpoints(l);
    for (double b : fbp::breakpoints(k)) breaks.push_back(x - b);
    out.push_back(scale * quad::trapezoid(
                              [&](double y) {
                                return eval_recon_kernel(l, y) * eval_binning_kernel(k, x - y);
                              },
                              -rl, rl, breaks, step));
  }
  return out;
}

}  // namespace fbp
