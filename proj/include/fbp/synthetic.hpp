#pragma once

// Synthetic event scenes with planted motion. Each feature is a fixed point
// in normalized coordinates at the packet reference time; its events are
// placed by inverting the configured warp exactly, so warping with the
// planted parameters collapses every feature back to a point.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <tuple>
#include <vector>

#include "fbp/error.hpp"
#include "fbp/warp.hpp"

namespace fbp {

/// Affine map from sensor units to normalized coordinates:
/// x_n = (x - offset_x) * scale.
struct CoordinateMap {
  double scale = 1.0 / 200.0;
  double offset_x = 120.0;
  double offset_y = 90.0;

  double to_normalized_x(double x) const { return (x - offset_x) * scale; }
  double to_normalized_y(double y) const { return (y - offset_y) * scale; }
  double to_sensor_x(double xn) const { return xn / scale + offset_x; }
  double to_sensor_y(double yn) const { return yn / scale + offset_y; }

  void validate() const {
    if (!(scale > 0.0) || !std::isfinite(scale))
      throw Error(ErrorCode::InvalidArgument, "coordinate scale must be positive");
  }
};

inline std::vector<Event> normalize_events(std::vector<Event> events, const CoordinateMap& map) {
  map.validate();
  for (auto& e : events) {
    e.x = map.to_normalized_x(e.x);
    e.y = map.to_normalized_y(e.y);
  }
  return events;
}

struct SyntheticScene {
  std::uint64_t seed = 7;
  int n_points = 100;
  MotionModel model = MotionModel::Rotational;
  Vec3 motion{1.0, -0.8, 1.2};
  /// Time span of one packet in seconds.
  double duration = 0.05;
  int events_per_point = 30;
  /// Gaussian jitter in sensor units.
  double noise_std = 0.0;
  int n_packets = 1;
  /// Features are drawn uniformly in [-extent_x, extent_x] x [-extent_y, extent_y].
  double extent_x = 0.5;
  double extent_y = 0.375;
  CoordinateMap map{};

  int events_per_packet() const { return n_points * events_per_point; }

  void validate() const {
    if (n_points < 1 || events_per_point < 1 || n_packets < 1)
      throw Error(ErrorCode::InvalidArgument, "scene needs at least one point, event and packet");
    if (!(duration > 0.0)) throw Error(ErrorCode::InvalidArgument, "scene duration must be positive");
    if (!(noise_std >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise must be nonnegative");
    map.validate();
  }
};

struct SyntheticEvents {
  /// Events in sensor units, sorted by time, packet after packet.
  std::vector<Event> events;
  /// Planted parameters, one entry per packet.
  std::vector<Vec3> truth;
  /// Feature positions (normalized) and the feature index of every event.
  std::vector<std::array<double, 2>> features;
  std::vector<int> feature_of_event;
};

namespace detail {

// Nearest double to k / scale, which is also what parsing the printed decimal yields.
inline double round_to(double x, double scale) { return std::round(x * scale) / scale; }

// Solves warp(p) = (X, Y) for p = (x, y, 1) under the perspective divide.
inline std::array<double, 2> invert_warp(MotionModel model, const Vec3& theta, double dt, double X,
                                         double Y) {
  if (model == MotionModel::Translational) {
    const double s = 1.0 + dt * theta[2];
    return {X * s - dt * theta[0], Y * s - dt * theta[1]};
  }
  // M = I + dt [w]x ; p ~ M^{-1} (X, Y, 1) via the adjugate.
  const double a = dt * theta[0], b = dt * theta[1], c = dt * theta[2];
  const double m[3][3] = {{1.0, -c, b}, {c, 1.0, -a}, {-b, a, 1.0}};
  double inv[3][3];
  inv[0][0] = m[1][1] * m[2][2] - m[1][2] * m[2][1];
  inv[0][1] = m[0][2] * m[2][1] - m[0][1] * m[2][2];
  inv[0][2] = m[0][1] * m[1][2] - m[0][2] * m[1][1];
  inv[1][0] = m[1][2] * m[2][0] - m[1][0] * m[2][2];
  inv[1][1] = m[0][0] * m[2][2] - m[0][2] * m[2][0];
  inv[1][2] = m[0][2] * m[1][0] - m[0][0] * m[1][2];
  inv[2][0] = m[1][0] * m[2][1] - m[1][1] * m[2][0];
  inv[2][1] = m[0][1] * m[2][0] - m[0][0] * m[2][1];
  inv[2][2] = m[0][0] * m[1][1] - m[0][1] * m[1][0];
  const double q[3] = {X, Y, 1.0};
  double p[3];
  for (int r = 0; r < 3; ++r) p[r] = inv[r][0] * q[0] + inv[r][1] * q[1] + inv[r][2] * q[2];
  return {p[0] / p[2], p[1] / p[2]};
}

}  // namespace detail

/// Deterministic in the seed. Timestamps are quantized to 1 ns and sensor
/// coordinates to 1e-6 so that a text round trip at those precisions is exact.
inline SyntheticEvents synth_events(const SyntheticScene& scene) {
  scene.validate();
  std::mt19937_64 rng(scene.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  SyntheticEvents out;
  for (int f = 0; f < scene.n_points; ++f)
    out.features.push_back({(2.0 * unit(rng) - 1.0) * scene.extent_x,
                            (2.0 * unit(rng) - 1.0) * scene.extent_y});

  const double spacing = scene.duration / scene.events_per_point;
  for (int k = 0; k < scene.n_packets; ++k) {
    const double t0 = scene.duration * k;
    // (t, feature, polarity)
    std::vector<std::tuple<double, int, int>> stamps;
    stamps.reserve(scene.events_per_packet());
    for (int f = 0; f < scene.n_points; ++f) {
      const double phase = unit(rng) * spacing;
      for (int m = 0; m < scene.events_per_point; ++m) {
        const double t = detail::round_to(t0 + phase + spacing * m, 1e9);
        stamps.emplace_back(t, f, unit(rng) < 0.5 ? -1 : 1);
      }
    }
    std::stable_sort(stamps.begin(), stamps.end(),
                     [](const auto& a, const auto& b) { return std::get<0>(a) < std::get<0>(b); });

    std::vector<Event> packet;
    packet.reserve(stamps.size());
    for (const auto& [t, f, pol] : stamps) packet.push_back({t, 0.0, 0.0, pol});
    const double t_ref = reference_time(packet, RefTimePolicy::Mean);

    for (std::size_t i = 0; i < packet.size(); ++i) {
      const int f = std::get<1>(stamps[i]);
      const auto p = detail::invert_warp(scene.model, scene.motion, t_ref - packet[i].t,
                                         out.features[f][0], out.features[f][1]);
      double xs = scene.map.to_sensor_x(p[0]);
      double ys = scene.map.to_sensor_y(p[1]);
      if (scene.noise_std > 0.0) {
        xs += scene.noise_std * gauss(rng);
        ys += scene.noise_std * gauss(rng);
      }
      packet[i].x = detail::round_to(xs, 1e6);
      packet[i].y = detail::round_to(ys, 1e6);
      out.feature_of_event.push_back(f);
    }
    out.events.insert(out.events.end(), packet.begin(), packet.end());
    out.truth.push_back(scene.motion);
  }
  return out;
}

}  // namespace fbp
