#pragma once

// Event containers and the parametric warps x' = x + (t_ref - t) * (omega x x)
// (rotational) and x' = x + (t_ref - t) * v (translational), on homogeneous
// points (x, y, 1), followed by a perspective divide.

#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fbp/binning.hpp"
#include "fbp/error.hpp"

namespace fbp {

using Vec3 = std::array<double, 3>;

struct Event {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  int polarity = 1;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class RefTimePolicy { Mean, Midpoint, First, Last };

enum class MotionModel { Rotational, Translational };

inline std::string_view to_string(MotionModel m) {
  return m == MotionModel::Rotational ? "rot" : "trans";
}

inline double reference_time(const std::vector<Event>& events, RefTimePolicy policy) {
  if (events.empty()) throw Error(ErrorCode::InvalidArgument, "reference time of an empty packet");
  switch (policy) {
    case RefTimePolicy::Mean: {
      double s = 0.0;
      for (const auto& e : events) s += e.t;
      return s / static_cast<double>(events.size());
    }
    case RefTimePolicy::Midpoint: return 0.5 * (events.front().t + events.back().t);
    case RefTimePolicy::First: return events.front().t;
    case RefTimePolicy::Last: return events.back().t;
  }
  return events.front().t;
}

struct EventPacket {
  std::vector<Event> events;
  double t_ref = 0.0;

  EventPacket() = default;
  EventPacket(std::vector<Event> evs, double tref) : events(std::move(evs)), t_ref(tref) {
    validate();
  }
  EventPacket(std::vector<Event> evs, RefTimePolicy policy) : events(std::move(evs)) {
    validate_events();
    t_ref = reference_time(events, policy);
  }

  std::size_t size() const { return events.size(); }

  void validate() const {
    validate_events();
    if (!(t_ref >= events.front().t && t_ref <= events.back().t))
      throw Error(ErrorCode::InvalidArgument, "reference time outside the packet time span");
  }

 private:
  void validate_events() const {
    if (events.empty()) throw Error(ErrorCode::InvalidArgument, "empty event packet");
    for (std::size_t i = 0; i < events.size(); ++i) {
      const auto& e = events[i];
      if (!std::isfinite(e.t) || !std::isfinite(e.x) || !std::isfinite(e.y))
        throw Error(ErrorCode::InvalidArgument, "non-finite event " + std::to_string(i));
      if (e.polarity != 1 && e.polarity != -1)
        throw Error(ErrorCode::InvalidArgument, "polarity must be -1 or +1");
      if (i > 0 && e.t < events[i - 1].t)
        throw Error(ErrorCode::InvalidArgument, "packet timestamps must be nondecreasing");
    }
  }
};

enum class WeightRule { Constant, Polarity };
enum class Projection { Perspective, DropThird };

struct WarpOptions {
  WeightRule weights = WeightRule::Constant;
  Projection projection = Projection::Perspective;
  /// Events whose homogeneous third component is below this are excluded.
  double min_depth = 1e-6;
};

/// Warped points plus the 2x3 Jacobian d(x', y')/d(theta) per kept event,
/// stored row-major as {dx/dθ1, dx/dθ2, dx/dθ3, dy/dθ1, dy/dθ2, dy/dθ3}.
struct WarpResult {
  WeightedPoints points;
  std::vector<std::array<double, 6>> jacobian;
  std::vector<std::size_t> source_index;
  std::size_t excluded = 0;
};

namespace detail {

struct Homogeneous {
  Vec3 q;
  // dq/dθ, row r = component r
  std::array<Vec3, 3> dq;
};

inline Homogeneous rotate(const Event& e, double dt, const Vec3& w) {
  // q = p + dt * (w x p), p = (x, y, 1)
  const double x = e.x, y = e.y;
  Homogeneous h;
  h.q = {x + dt * (w[1] - w[2] * y), y + dt * (w[2] * x - w[0]), 1.0 + dt * (w[0] * y - w[1] * x)};
  h.dq[0] = {0.0, dt, -dt * y};
  h.dq[1] = {-dt, 0.0, dt * x};
  h.dq[2] = {dt * y, -dt * x, 0.0};
  return h;
}

inline Homogeneous translate(const Event& e, double dt, const Vec3& v) {
  Homogeneous h;
  h.q = {e.x + dt * v[0], e.y + dt * v[1], 1.0 + dt * v[2]};
  h.dq[0] = {dt, 0.0, 0.0};
  h.dq[1] = {0.0, dt, 0.0};
  h.dq[2] = {0.0, 0.0, dt};
  return h;
}

template <class HomogeneousFn>
WarpResult warp_packet(const EventPacket& packet, const WarpOptions& opts, HomogeneousFn&& fn) {
  packet.validate();
  WarpResult out;
  const std::size_t n = packet.size();
  out.points.xs.reserve(n);
  out.points.ys.reserve(n);
  out.points.ws.reserve(n);
  out.jacobian.reserve(n);
  out.source_index.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Event& e = packet.events[i];
    const Homogeneous h = fn(e, packet.t_ref - e.t);
    double px, py;
    std::array<double, 6> jac;
    if (opts.projection == Projection::Perspective) {
      if (!(std::abs(h.q[2]) >= opts.min_depth)) {
        ++out.excluded;
        continue;
      }
      const double inv = 1.0 / h.q[2];
      px = h.q[0] * inv;
      py = h.q[1] * inv;
      for (int k = 0; k < 3; ++k) {
        jac[k] = (h.dq[0][k] - px * h.dq[2][k]) * inv;
        jac[3 + k] = (h.dq[1][k] - py * h.dq[2][k]) * inv;
      }
    } else {
      px = h.q[0];
      py = h.q[1];
      for (int k = 0; k < 3; ++k) {
        jac[k] = h.dq[0][k];
        jac[3 + k] = h.dq[1][k];
      }
    }
    out.points.xs.push_back(px);
    out.points.ys.push_back(py);
    out.points.ws.push_back(opts.weights == WeightRule::Polarity ? e.polarity : 1.0);
    out.jacobian.push_back(jac);
    out.source_index.push_back(i);
  }
  return out;
}

}  // namespace detail

inline WarpResult warp_rotational(const EventPacket& packet, const Vec3& omega,
                                  const WarpOptions& opts = {}) {
  return detail::warp_packet(packet, opts,
                             [&](const Event& e, double dt) { return detail::rotate(e, dt, omega); });
}

inline WarpResult warp_translational(const EventPacket& packet, const Vec3& v,
                                     const WarpOptions& opts = {}) {
  return detail::warp_packet(packet, opts,
                             [&](const Event& e, double dt) { return detail::translate(e, dt, v); });
}

inline WarpResult warp(MotionModel model, const EventPacket& packet, const Vec3& theta,
                       const WarpOptions& opts = {}) {
  return model == MotionModel::Rotational ? warp_rotational(packet, theta, opts)
                                          : warp_translational(packet, theta, opts);
}

/// Pre-projection homogeneous coordinates of the warped events.
inline std::vector<Vec3> warp_homogeneous(MotionModel model, const EventPacket& packet,
                                          const Vec3& theta) {
  std::vector<Vec3> out;
  out.reserve(packet.size());
  for (const auto& e : packet.events) {
    const double dt = packet.t_ref - e.t;
    out.push_back(model == MotionModel::Rotational ? detail::rotate(e, dt, theta).q
                                                   : detail::translate(e, dt, theta).q);
  }
  return out;
}

}  // namespace fbp
