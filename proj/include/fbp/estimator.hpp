#pragma once

// Contrast objective f(theta) = score(bin(warp(packet, theta))) with its
// gradient through the adjoint chain, and L-BFGS motion estimation.

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "fbp/binning.hpp"
#include "fbp/lbfgs.hpp"
#include "fbp/objectives.hpp"
#include "fbp/warp.hpp"

namespace fbp {

struct ObjectiveConfig {
  BinningKernelKind kernel = BinningKernelKind::Rect;
  GradMode mode = GradMode::fbp();
  ScoreKind score = ScoreKind::variance();
  FrameGrid grid = FrameGrid::centered(200, 150, 0.01);
  MotionModel model = MotionModel::Rotational;
  RefTimePolicy t_ref_policy = RefTimePolicy::Mean;
  WarpOptions warp{};
};

/// Objective bound to a configuration. Holds the prepared derivative rule,
/// so repeated evaluations do not resynthesize kappa.
class ContrastObjective {
 public:
  explicit ContrastObjective(ObjectiveConfig cfg)
      : cfg_(std::move(cfg)), rule_(cfg_.kernel, cfg_.mode) {
    cfg_.grid.validate();
  }

  const ObjectiveConfig& config() const { return cfg_; }
  const AxisRule& rule() const { return rule_; }

  Frame frame(const EventPacket& packet, const Vec3& theta) const {
    return bin_forward(warp(cfg_.model, packet, theta, cfg_.warp).points, cfg_.grid, cfg_.kernel);
  }

  double value(const EventPacket& packet, const Vec3& theta) const {
    return score(cfg_.score, frame(packet, theta));
  }

  double value_and_gradient(const EventPacket& packet, const Vec3& theta, Vec3& grad) const {
    const auto warped = warp(cfg_.model, packet, theta, cfg_.warp);
    const Frame h = bin_forward(warped.points, cfg_.grid, cfg_.kernel);
    const double f = score(cfg_.score, h);
    const Frame adj = score_adjoint(cfg_.score, h);
    const auto pg = bin_vjp(warped.points, adj, cfg_.grid, rule_);
    grad = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < warped.jacobian.size(); ++i) {
      const auto& j = warped.jacobian[i];
      for (int k = 0; k < 3; ++k) grad[k] += pg.gx[i] * j[k] + pg.gy[i] * j[3 + k];
    }
    return f;
  }

  Vec3 gradient(const EventPacket& packet, const Vec3& theta) const {
    Vec3 g;
    value_and_gradient(packet, theta, g);
    return g;
  }

 private:
  ObjectiveConfig cfg_;
  AxisRule rule_;
};

inline double objective_value(const ObjectiveConfig& cfg, const EventPacket& packet,
                              const Vec3& theta) {
  return ContrastObjective(cfg).value(packet, theta);
}

inline Vec3 objective_grad(const ObjectiveConfig& cfg, const EventPacket& packet,
                           const Vec3& theta) {
  return ContrastObjective(cfg).gradient(packet, theta);
}

inline OptResult<3> lbfgs_maximize(const ContrastObjective& objective, const EventPacket& packet,
                                   const Vec3& theta0, const LbfgsOptions& opts = {}) {
  return lbfgs_maximize_fn<3>(
      [&](const Vec3& theta, Vec3& g) { return objective.value_and_gradient(packet, theta, g); },
      theta0, opts);
}

inline OptResult<3> lbfgs_maximize(const ObjectiveConfig& cfg, const EventPacket& packet,
                                   const Vec3& theta0, const LbfgsOptions& opts = {}) {
  return lbfgs_maximize(ContrastObjective(cfg), packet, theta0, opts);
}

/// sqrt(mean ||estimate - truth||^2), optionally converted from rad/s to deg/s.
inline double rms_error(const std::vector<Vec3>& estimates, const std::vector<Vec3>& truths,
                        bool to_degrees = false) {
  if (estimates.size() != truths.size())
    throw Error(ErrorCode::LengthMismatch, "estimates and truths differ in length");
  if (estimates.empty()) throw Error(ErrorCode::InvalidArgument, "rms of an empty list");
  double s = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    for (int k = 0; k < 3; ++k) {
      const double d = estimates[i][k] - truths[i][k];
      s += d * d;
    }
  const double rms = std::sqrt(s / static_cast<double>(estimates.size()));
  return to_degrees ? rms * 180.0 / std::numbers::pi : rms;
}

}  // namespace fbp
