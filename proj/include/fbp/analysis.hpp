#pragma once

// Gradient-bias measurement: analytic gradients against long-range central
// differences on a parameter grid, surrogate comparisons, and the
// degree-of-precision battery for synthesized kernels.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "fbp/error.hpp"
#include "fbp/estimator.hpp"
#include "fbp/kernels.hpp"
#include "fbp/quadrature.hpp"

namespace fbp {

/// Componentwise (f(x + s e_i) - f(x - s e_i)) / 2s.
template <std::size_t N, class F>
std::array<double, N> fd_gradient(F&& f, const std::array<double, N>& x, double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  std::array<double, N> g{};
  for (std::size_t i = 0; i < N; ++i) {
    auto xp = x, xm = x;
    xp[i] += step;
    xm[i] -= step;
    g[i] = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

inline Vec3 fd_gradient(const ContrastObjective& objective, const EventPacket& packet,
                        const Vec3& theta, double step) {
  return fd_gradient<3>([&](const Vec3& t) { return objective.value(packet, t); }, theta, step);
}

inline Vec3 fd_gradient(const ObjectiveConfig& cfg, const EventPacket& packet, const Vec3& theta,
                        double step) {
  return fd_gradient(ContrastObjective(cfg), packet, theta, step);
}

struct BiasGridSpec {
  Vec3 lo{-5.0, -5.0, -5.0};
  Vec3 hi{5.0, 5.0, 5.0};
  int n = 11;
  /// Number of leading axes that are swept; the rest stay at base.
  int dims = 3;
  Vec3 base{0.0, 0.0, 0.0};
  double fd_step = 1.0;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned threads = 0;

  void validate() const {
    if (n < 2) throw Error(ErrorCode::InvalidArgument, "bias grid needs at least 2 samples per axis");
    if (dims < 1 || dims > 3) throw Error(ErrorCode::InvalidArgument, "bias grid dims must be 1..3");
    if (!(fd_step > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite-difference step must be positive");
  }

  std::vector<Vec3> points() const {
    validate();
    std::size_t count = 1;
    for (int d = 0; d < dims; ++d) count *= static_cast<std::size_t>(n);
    std::vector<Vec3> out;
    out.reserve(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
      Vec3 t = base;
      std::size_t rem = idx;
      // Last swept axis varies fastest.
      for (int d = dims - 1; d >= 0; --d) {
        const auto j = static_cast<double>(rem % static_cast<std::size_t>(n));
        rem /= static_cast<std::size_t>(n);
        t[d] = lo[d] + (hi[d] - lo[d]) * j / static_cast<double>(n - 1);
      }
      out.push_back(t);
    }
    return out;
  }
};

struct ModeBias {
  GradMode mode;
  std::vector<Vec3> analytic;
  double mean_abs_bias = 0.0;
  double sign_agreement = 0.0;
};

struct BiasReport {
  std::vector<Vec3> thetas;
  std::vector<Vec3> fd;
  std::vector<ModeBias> modes;
  double fd_step = 1.0;

  std::size_t evaluations() const { return thetas.size(); }
  std::size_t components() const { return 3 * thetas.size(); }
  double max_abs_fd() const {
    double m = 0.0;
    for (const auto& g : fd)
      for (double c : g) m = std::max(m, std::abs(c));
    return m;
  }
};

namespace detail {

inline int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < count; i += threads) fn(i);
    });
  for (auto& th : pool) th.join();
}

inline void summarize(ModeBias& m, const std::vector<Vec3>& fd) {
  double abs_bias = 0.0;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < fd.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      abs_bias += std::abs(m.analytic[i][k] - fd[i][k]);
      agree += sign_of(m.analytic[i][k]) == sign_of(fd[i][k]);
    }
  const double n = 3.0 * static_cast<double>(fd.size());
  m.mean_abs_bias = fd.empty() ? 0.0 : abs_bias / n;
  m.sign_agreement = fd.empty() ? 0.0 : static_cast<double>(agree) / n;
}

}  // namespace detail

/// Analytic gradients for every mode and one shared central-difference
/// gradient at each grid point. The primal pass does not depend on the
/// mode, so the finite differences are computed once.
inline BiasReport bias_grid(const ObjectiveConfig& base, const EventPacket& packet,
                            const std::vector<GradMode>& modes, const BiasGridSpec& spec) {
  if (modes.empty()) throw Error(ErrorCode::InvalidArgument, "bias grid needs at least one mode");
  BiasReport report;
  report.thetas = spec.points();
  report.fd_step = spec.fd_step;
  const std::size_t n = report.thetas.size();
  report.fd.resize(n);

  std::vector<ContrastObjective> objectives;
  objectives.reserve(modes.size());
  for (const auto& mode : modes) {
    auto cfg = base;
    cfg.mode = mode;
    objectives.emplace_back(cfg);
  }
  for (const auto& mode : modes) report.modes.push_back({mode, std::vector<Vec3>(n), 0.0, 0.0});

  detail::parallel_for(n, spec.threads, [&](std::size_t i) {
    const Vec3& theta = report.thetas[i];
    report.fd[i] = fd_gradient(objectives.front(), packet, theta, spec.fd_step);
    for (std::size_t m = 0; m < objectives.size(); ++m)
      report.modes[m].analytic[i] = objectives[m].gradient(packet, theta);
  });
  for (auto& m : report.modes) detail::summarize(m, report.fd);
  return report;
}

inline BiasReport bias_grid(const ObjectiveConfig& cfg, const EventPacket& packet,
                            const BiasGridSpec& spec) {
  return bias_grid(cfg, packet, std::vector<GradMode>{cfg.mode}, spec);
}

/// One row per (mode, grid point, axis).
inline void write_bias_csv(std::ostream& out, const BiasReport& report) {
  out << "mode,theta1,theta2,theta3,axis,g_analytic,g_fd,bias,bias_normalized,fd_sign\n";
  const double norm = report.max_abs_fd();
  char buf[512];
  for (const auto& m : report.modes) {
    const std::string name = m.mode.name();
    for (std::size_t i = 0; i < report.thetas.size(); ++i) {
      const auto& t = report.thetas[i];
      for (int k = 0; k < 3; ++k) {
        const double a = m.analytic[i][k];
        const double f = report.fd[i][k];
        const double b = a - f;
        std::snprintf(buf, sizeof buf, "%s,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g,%.17g,%d\n",
                      name.c_str(), t[0], t[1], t[2], k + 1, a, f, b, norm > 0.0 ? b / norm : 0.0,
                      detail::sign_of(f));
        out << buf;
      }
    }
  }
}

struct SurrogateRow {
  GradMode mode;
  double mean_abs_bias = 0.0;
  double sign_agreement = 0.0;
  /// 1 = lowest mean |bias|; empty for a single-mode table.
  std::optional<int> rank;
};

inline std::vector<SurrogateRow> rank_modes(const BiasReport& report) {
  std::vector<SurrogateRow> rows;
  for (const auto& m : report.modes) rows.push_back({m.mode, m.mean_abs_bias, m.sign_agreement, {}});
  if (rows.size() < 2) return rows;
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rows[a].mean_abs_bias < rows[b].mean_abs_bias;
  });
  for (std::size_t r = 0; r < order.size(); ++r) rows[order[r]].rank = static_cast<int>(r + 1);
  return rows;
}

inline std::vector<SurrogateRow> compare_surrogates(const ObjectiveConfig& base,
                                                    const EventPacket& packet,
                                                    const std::vector<GradMode>& modes,
                                                    const BiasGridSpec& spec) {
  return rank_modes(bias_grid(base, packet, modes, spec));
}

// ---------------------------------------------------------------------------
// Degree of precision

struct PrecisionRow {
  int n = 0;
  /// \int x^n kappa'(x) dx
  double lhs = 0.0;
  /// -n \int x^(n-1) k(x) dx
  double rhs = 0.0;
  /// rhs - lhs
  double residual = 0.0;
};

inline std::vector<PrecisionRow> degree_of_precision(const SynthesizedKernel& kappa, int n_max,
                                                     double step = 1e-4) {
  if (n_max < 1) throw Error(ErrorCode::InvalidArgument, "n_max must be at least 1");
  const auto k = kappa.binning_kind();
  const double rk = support_radius(k);
  const double rkappa = kappa.support_radius();
  const auto kappa_breaks = kappa.breakpoints();
  const auto k_breaks = breakpoints(k);
  std::vector<PrecisionRow> rows;
  for (int n = 0; n <= n_max; ++n) {
    PrecisionRow row;
    row.n = n;
    row.lhs = quad::gauss_legendre(
        [&](double x) { return std::pow(x, n) * kappa.derivative(x); }, -rkappa, rkappa,
        kappa_breaks, step);
    row.rhs = n == 0 ? 0.0
                     : -n * quad::gauss_legendre(
                                [&](double x) { return std::pow(x, n - 1) * eval_binning_kernel(k, x); },
                                -rk, rk, k_breaks, step);
    row.residual = row.rhs - row.lhs;
    rows.push_back(row);
  }
  return rows;
}

inline std::vector<PrecisionRow> degree_of_precision(BinningKernelKind k, ReconKernelKind l,
                                                     int n_max, double step = 1e-4) {
  return degree_of_precision(synthesize_kappa(k, l), n_max, step);
}

/// Second moment \int x^2 l(x) dx of the (normalized) reconstruction kernel.
inline double recon_second_moment(ReconKernelKind l, bool normalize_lanczos = true) {
  const double scale =
      (l == ReconKernelKind::Lanczos && normalize_lanczos) ? 1.0 / recon_kernel_raw_mass(l) : 1.0;
  const double r = support_radius(l);
  return scale * quad::gauss_legendre([&](double x) { return x * x * eval_recon_kernel(l, x); }, -r,
                                      r, breakpoints(l), 0.01);
}

}  // namespace fbp
