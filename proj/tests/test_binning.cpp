#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fbp/binning.hpp"

using namespace fbp;

namespace {

const BinningKernelKind kBinning[] = {BinningKernelKind::Rect, BinningKernelKind::Linear,
                                      BinningKernelKind::GaussTrunc};

std::vector<GradMode> all_modes() {
  return {GradMode::naive(), GradMode::fbp(ReconKernelKind::Linear), GradMode::fbp(ReconKernelKind::Cubic),
          GradMode::fbp(ReconKernelKind::Lanczos), GradMode::ste(), GradMode::sigmoid(10.0)};
}

WeightedPoints random_points(std::mt19937_64& rng, const FrameGrid& g, int n) {
  std::uniform_real_distribution<double> ux(g.origin_x - 2 * g.delta,
                                            g.origin_x + (g.width + 1) * g.delta);
  std::uniform_real_distribution<double> uy(g.origin_y - 2 * g.delta,
                                            g.origin_y + (g.height + 1) * g.delta);
  std::uniform_real_distribution<double> uw(-1.0, 1.0);
  WeightedPoints p;
  for (int i = 0; i < n; ++i) {
    p.xs.push_back(ux(rng));
    p.ys.push_back(uy(rng));
    p.ws.push_back(uw(rng));
  }
  return p;
}

// Smooth rule with a closed-form kappa, used to check the tangent pass
// against finite differences of a matching forward pass.
struct CubicBSpline {
  double value(double x) const {
    const double a = std::abs(x);
    if (a < 1.0) return (4.0 + 3.0 * (a - 2.0) * a * a) / 6.0;
    if (a < 2.0) return (2.0 - a) * (2.0 - a) * (2.0 - a) / 6.0;
    return 0.0;
  }
  double derivative(double x) const {
    const double a = std::abs(x), s = x < 0 ? -1.0 : 1.0;
    if (a < 1.0) return s * (1.5 * a * a - 2.0 * a);
    if (a < 2.0) return -s * 0.5 * (2.0 - a) * (2.0 - a);
    return 0.0;
  }
  double radius() const { return 2.0; }
};

}  // namespace

TEST(FrameGrid, CenteredIsSymmetric) {
  const auto g = FrameGrid::centered(200, 150, 0.01);
  EXPECT_DOUBLE_EQ(g.origin_x, -0.995);
  EXPECT_DOUBLE_EQ(g.origin_y, -0.745);
  EXPECT_EQ(g.size(), 30000u);
}

TEST(FrameGrid, RejectsBadShapes) {
  EXPECT_THROW((FrameGrid{0, 10, 1.0}.validate()), Error);
  EXPECT_THROW((FrameGrid{10, 10, 0.0}.validate()), Error);
  EXPECT_THROW((FrameGrid{10, 10, -1.0}.validate()), Error);
  try {
    FrameGrid{10, -1, 1.0}.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidGrid);
  }
}

TEST(BinForward, RectCountsPoints) {
  const FrameGrid g{4, 3, 1.0, 0.0, 0.0};
  WeightedPoints p{{0.1, 0.2, 2.9, 7.0}, {0.0, -0.3, 1.4, 0.0}, {1.0, 1.0, 1.0, 1.0}};
  const auto h = bin_forward(p, g, BinningKernelKind::Rect);
  EXPECT_EQ(h.at(0, 0), 2.0);
  EXPECT_EQ(h.at(3, 1), 1.0);
  EXPECT_EQ(h.sum(), 3.0);
}

TEST(BinForward, LinearSplitsBetweenNeighbours) {
  const FrameGrid g{3, 1, 0.5, 0.0, 0.0};
  WeightedPoints p{{0.35}, {0.0}, {2.0}};
  const auto h = bin_forward(p, g, BinningKernelKind::Linear);
  EXPECT_NEAR(h.at(0, 0), 2.0 * 0.3, 1e-15);
  EXPECT_NEAR(h.at(1, 0), 2.0 * 0.7, 1e-15);
  EXPECT_EQ(h.at(2, 0), 0.0);
}

TEST(BinForward, InteriorMassEqualsWeightTimesKernelMassSquared) {
  const auto g = FrameGrid::centered(40, 30, 0.1);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), uy(-0.7, 0.7);
  WeightedPoints p;
  for (int i = 0; i < 200; ++i) {
    p.xs.push_back(ux(rng));
    p.ys.push_back(uy(rng));
    p.ws.push_back(1.0);
  }
  EXPECT_NEAR(bin_forward(p, g, BinningKernelKind::Rect).sum(), 200.0, 1e-12);
  EXPECT_NEAR(bin_forward(p, g, BinningKernelKind::Linear).sum(), 200.0, 1e-12);
  // The truncated Gaussian sums to one over the integer lattice only approximately.
  const double s = bin_forward(p, g, BinningKernelKind::GaussTrunc).sum();
  EXPECT_GT(s, 0.45 * 200.0);
  EXPECT_LT(s, 0.8 * 200.0);
}

TEST(BinForward, DropsContributionsOutsideTheGrid) {
  const FrameGrid g{2, 2, 1.0, 0.0, 0.0};
  WeightedPoints p{{-0.5, 1.5, 100.0}, {0.0, 1.0, 0.0}, {1.0, 1.0, 1.0}};
  const auto h = bin_forward(p, g, BinningKernelKind::Linear);
  EXPECT_NEAR(h.at(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(h.at(1, 1), 0.5, 1e-15);
  EXPECT_NEAR(h.sum(), 1.0, 1e-15);
}

TEST(BinForward, RejectsLengthMismatch) {
  const FrameGrid g{2, 2, 1.0};
  WeightedPoints p{{0.0, 1.0}, {0.0}, {1.0, 1.0}};
  try {
    bin_forward(p, g, BinningKernelKind::Rect);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LengthMismatch);
  }
}

TEST(BinVjp, RejectsAdjointShapeMismatch) {
  const FrameGrid g{3, 2, 1.0};
  WeightedPoints p{{0.0}, {0.0}, {1.0}};
  Frame adj(FrameGrid{2, 3, 1.0});
  try {
    bin_vjp(p, adj, g, BinningKernelKind::Rect, GradMode::fbp());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ShapeMismatch);
  }
}

TEST(BinAdjoint, DotProductIdentityAllKernelsAndModes) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n01;
  const FrameGrid g{12, 9, 0.1, -0.5, -0.4};
  for (auto k : kBinning)
    for (const auto& mode : all_modes()) {
      const AxisRule rule(k, mode);
      for (int trial = 0; trial < 20; ++trial) {
        const auto p = random_points(rng, g, 25);
        std::vector<double> xd(p.size()), yd(p.size());
        for (auto& v : xd) v = n01(rng);
        for (auto& v : yd) v = n01(rng);
        Frame adj(g);
        for (auto& v : adj.values) v = n01(rng);
        const auto jv = bin_jvp(p, xd, yd, g, rule);
        const auto vj = bin_vjp(p, adj, g, rule);
        double lhs = 0.0, rhs = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < adj.size(); ++i) {
          lhs += adj.values[i] * jv.values[i];
          scale += std::abs(adj.values[i] * jv.values[i]);
        }
        for (std::size_t i = 0; i < p.size(); ++i) rhs += vj.gx[i] * xd[i] + vj.gy[i] * yd[i];
        EXPECT_LE(std::abs(lhs - rhs), 1e-9 * std::max(1.0, scale))
            << to_string(k) << " " << mode.name();
      }
    }
}

TEST(BinForward, IndependentOfGradMode) {
  std::mt19937_64 rng(12);
  const FrameGrid g{10, 8, 0.2};
  const auto p = random_points(rng, g, 50);
  for (auto k : kBinning) {
    const auto ref = bin_forward(p, g, k);
    for (const auto& mode : all_modes()) {
      const AxisRule rule(k, mode);
      (void)rule;
      EXPECT_EQ(bin_forward(p, g, k).values, ref.values);
    }
  }
}

TEST(BinJvp, SmoothRuleMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> n01;
  const FrameGrid g{8, 6, 0.25, 0.0, 0.0};
  auto p = random_points(rng, g, 10);
  std::vector<double> xd(p.size()), yd(p.size());
  for (auto& v : xd) v = n01(rng);
  for (auto& v : yd) v = n01(rng);
  const CubicBSpline spline;
  const auto forward = [&](const WeightedPoints& q) {
    return bin_forward_with(q, g, [&](double d) { return spline.value(d); }, spline.radius());
  };
  const auto jv = bin_jvp_with(p, xd, yd, g, spline);
  const double h = 1e-6;
  auto pp = p, pm = p;
  for (std::size_t i = 0; i < p.size(); ++i) {
    pp.xs[i] += h * xd[i], pp.ys[i] += h * yd[i];
    pm.xs[i] -= h * xd[i], pm.ys[i] -= h * yd[i];
  }
  const auto fp = forward(pp), fm = forward(pm);
  for (std::size_t i = 0; i < jv.size(); ++i)
    EXPECT_NEAR(jv.values[i], (fp.values[i] - fm.values[i]) / (2 * h), 1e-6);
}

TEST(BinVjp, FbpRectLinearEqualsNaiveOfQuadraticBSpline) {
  // With l = Linear the FBP rule for Rect is the naive rule of the quadratic B-spline.
  struct QuadBSpline {
    double value(double x) const {
      const double a = std::abs(x);
      if (a < 0.5) return 0.75 - a * a;
      if (a < 1.5) return (1.5 - a) * (1.5 - a) / 2.0;
      return 0.0;
    }
    double derivative(double x) const {
      const double a = std::abs(x), s = x < 0 ? -1.0 : 1.0;
      if (a < 0.5) return -2.0 * x;
      if (a < 1.5) return -s * (1.5 - a);
      return 0.0;
    }
    double radius() const { return 1.5; }
  };
  std::mt19937_64 rng(14);
  std::normal_distribution<double> n01;
  const FrameGrid g{9, 7, 0.1};
  const auto p = random_points(rng, g, 40);
  Frame adj(g);
  for (auto& v : adj.values) v = n01(rng);
  const auto a = bin_vjp(p, adj, g, BinningKernelKind::Rect, GradMode::fbp());
  const auto b = bin_vjp_with(p, adj, g, QuadBSpline{});
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_NEAR(a.gx[i], b.gx[i], 1e-9);
    EXPECT_NEAR(a.gy[i], b.gy[i], 1e-9);
  }
}

TEST(BinVjp, NaiveRectIsZero) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> n01;
  const FrameGrid g{9, 7, 0.1};
  const auto p = random_points(rng, g, 40);
  Frame adj(g);
  for (auto& v : adj.values) v = n01(rng);
  const auto vj = bin_vjp(p, adj, g, BinningKernelKind::Rect, GradMode::naive());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(vj.gx[i], 0.0);
    EXPECT_EQ(vj.gy[i], 0.0);
  }
}

TEST(GradMode, Names) {
  EXPECT_EQ(GradMode::naive().name(), "naive");
  EXPECT_EQ(GradMode::fbp().name(), "fbp-linear");
  EXPECT_EQ(GradMode::fbp(ReconKernelKind::Cubic).name(), "fbp-cubic");
  EXPECT_EQ(GradMode::ste().name(), "ste");
  EXPECT_EQ(GradMode::sigmoid().name(), "sigmoid");
}

TEST(Surrogates, SteAndSigmoidShapes) {
  EXPECT_EQ(ste_derivative(0.3), -1.0);
  EXPECT_EQ(ste_derivative(-0.3), 1.0);
  EXPECT_EQ(ste_derivative(1.0), 0.0);
  EXPECT_NEAR(sigmoid_prime(0.0), 0.25, 1e-15);
  EXPECT_NEAR(sigmoid_surrogate_derivative(0.5, 10.0), sigmoid_prime(10.0) - 0.25, 1e-15);
  EXPECT_EQ(sigmoid_surrogate_derivative(0.0, 10.0), 0.0);
  EXPECT_EQ(sigmoid_surrogate_derivative(4.6, 10.0), 0.0);
  EXPECT_THROW(AxisRule(BinningKernelKind::Rect, GradMode::sigmoid(0.0)), Error);
}

TEST(AxisRule, Radii) {
  EXPECT_EQ(AxisRule(BinningKernelKind::Rect, GradMode::naive()).radius(), 0.5);
  EXPECT_EQ(AxisRule(BinningKernelKind::Rect, GradMode::fbp()).radius(), 1.5);
  EXPECT_EQ(AxisRule(BinningKernelKind::Rect, GradMode::fbp(ReconKernelKind::Lanczos)).radius(), 2.5);
  EXPECT_EQ(AxisRule(BinningKernelKind::Rect, GradMode::ste()).radius(), 1.5);
  EXPECT_EQ(AxisRule(BinningKernelKind::Rect, GradMode::sigmoid(10.0)).radius(), 4.5);
}

TEST(Bin1D, AdjointIdentity) {
  std::mt19937_64 rng(16);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> ux(-0.3, 2.3);
  const Grid1D g{20, 0.1, 0.0};
  for (auto k : kBinning)
    for (const auto& mode : all_modes()) {
      const AxisRule rule(k, mode);
      std::vector<double> xs(30), ws(30), xd(30), adj(g.width);
      for (auto& v : xs) v = ux(rng);
      for (auto& v : ws) v = n01(rng);
      for (auto& v : xd) v = n01(rng);
      for (auto& v : adj) v = n01(rng);
      const auto jv = bin_jvp_1d(xs, ws, xd, g, rule);
      const auto vj = bin_vjp_1d(xs, ws, adj, g, rule);
      double lhs = 0.0, rhs = 0.0;
      for (int j = 0; j < g.width; ++j) lhs += adj[j] * jv[j];
      for (std::size_t i = 0; i < xs.size(); ++i) rhs += vj[i] * xd[i];
      EXPECT_NEAR(lhs, rhs, 1e-9 * std::max(1.0, std::abs(lhs)));
    }
}

TEST(Bin1D, ForwardRect) {
  const Grid1D g{3, 1.0, 0.0};
  const auto h = bin_forward_1d({0.2, 0.4, 1.6, 5.0}, {1.0, 2.0, 3.0, 4.0}, g, BinningKernelKind::Rect);
  EXPECT_EQ(h, (std::vector<double>{3.0, 0.0, 3.0}));
  EXPECT_THROW(bin_forward_1d({0.0}, {}, g, BinningKernelKind::Rect), Error);
}
