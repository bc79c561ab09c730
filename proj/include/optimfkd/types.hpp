#pragma once

#include <cmath>

namespace optimfkd {

constexpr int kStateDim = 6;
constexpr int kControlDim = 2;

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  double w = std::remainder(a, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

/// Planar pose (x, y, heading).
struct Pose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

/// Full vehicle state. Velocities are body-frame: v_x longitudinal,
/// v_y lateral, omega about +z. theta is wrapped to (-pi, pi].
struct RobotState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double v_x = 0.0;
  double v_y = 0.0;
  double omega = 0.0;

  Pose pose() const { return {x, y, theta}; }
  bool finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(theta) &&
           std::isfinite(v_x) && std::isfinite(v_y) && std::isfinite(omega);
  }
};

/// Piecewise-constant command: delta = forward velocity setpoint [m/s],
/// psi = angular velocity setpoint [rad/s].
struct Control {
  double delta = 0.0;
  double psi = 0.0;
};

/// State stamped with the time it refers to (seconds).
struct TimedState {
  RobotState state;
  double stamp = 0.0;
};

/// Expresses `target` in the body frame of `reference`: the offset is
/// rotated by -theta_ref and the heading difference is wrapped.
inline Pose relative_pose(const Pose& reference, const Pose& target) {
  const double c = std::cos(reference.theta);
  const double s = std::sin(reference.theta);
  const double dx = target.x - reference.x;
  const double dy = target.y - reference.y;
  return {c * dx + s * dy, -s * dx + c * dy, wrap_angle(target.theta - reference.theta)};
}

/// Inverse of relative_pose: maps a body-frame pose back to the world.
inline Pose compose_pose(const Pose& reference, const Pose& local) {
  const double c = std::cos(reference.theta);
  const double s = std::sin(reference.theta);
  return {reference.x + c * local.x - s * local.y,
          reference.y + s * local.x + c * local.y,
          wrap_angle(reference.theta + local.theta)};
}

/// Body-frame velocities pass through unchanged; only the pose re-frames.
inline RobotState relative_state(const Pose& reference, const RobotState& target) {
  const Pose p = relative_pose(reference, target.pose());
  return {p.x, p.y, p.theta, target.v_x, target.v_y, target.omega};
}

inline RobotState compose_state(const Pose& reference, const RobotState& local) {
  const Pose p = compose_pose(reference, local.pose());
  return {p.x, p.y, p.theta, local.v_x, local.v_y, local.omega};
}

}  // namespace optimfkd
