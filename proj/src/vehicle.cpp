#include "acflow/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace acflow {

double wrap_angle(double a) {
  constexpr double pi = std::numbers::pi;
  if (a >= -pi && a <= pi) return a;
  a = std::remainder(a, 2 * pi);
  return a;
}

GuidanceOutput guidance_tick(const RobotState& state, std::span<const Eigen::Vector2d> waypoints,
                             std::size_t current_index, const GuidanceConfig& cfg) {
  GuidanceOutput out;
  std::size_t idx = current_index;
  while (idx < waypoints.size() &&
         (waypoints[idx] - state.position).norm() <= cfg.waypoint_capture_radius) {
    ++idx;
  }
  out.waypoint_index = idx;
  if (idx >= waypoints.size()) {
    out.finished = true;
    return out;
  }
  const Eigen::Vector2d to = waypoints[idx] - state.position;
  const double error = wrap_angle(std::atan2(to.y(), to.x()) - state.heading);
  out.command.V = cfg.cruise_V * std::max(0.0, std::cos(error));
  out.command.omega = std::clamp(cfg.heading_gain * error, -cfg.omega_limit, cfg.omega_limit);
  return out;
}

RobotState integrate_motion(const RobotState& state, const VelocityCommand& cmd, double dt) {
  RobotState next = state;
  const double h0 = state.heading;
  const double dh = cmd.omega * dt;
  if (std::abs(cmd.omega) < 1e-9) {
    next.position += cmd.V * dt * Eigen::Vector2d(std::cos(h0), std::sin(h0));
  } else {
    const double rho = cmd.V / cmd.omega;
    next.position += rho * Eigen::Vector2d(std::sin(h0 + dh) - std::sin(h0),
                                           std::cos(h0) - std::cos(h0 + dh));
  }
  next.heading = wrap_angle(h0 + dh);
  return next;
}

Eigen::Vector2d closest_point_on_segment(const Segment& s, const Eigen::Vector2d& p) {
  const Eigen::Vector2d ab = s.b - s.a;
  const double u = std::clamp((p - s.a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return s.a + u * ab;
}

Contact check_collision(const RobotState& state, const WorldModel& world, double t) {
  double best = std::numeric_limits<double>::infinity();
  Eigen::Vector2d nearest = state.position;
  for (const auto& w : world.walls) {
    const Eigen::Vector2d q = closest_point_on_segment(w, state.position);
    const double d = (q - state.position).norm();
    if (d < best) {
      best = d;
      nearest = q;
    }
  }
  for (const auto& c : world.circles_at(t)) {
    const Eigen::Vector2d v = state.position - c.center;
    const double n = v.norm();
    const double d = n - c.radius;
    if (d < best) {
      best = d;
      nearest = n > 0 ? Eigen::Vector2d(c.center + c.radius * v / n) : c.center;
    }
  }
  Contact out;
  out.clearance = best - state.radius;
  out.nearest = nearest;
  out.collided = best <= state.radius;
  return out;
}

SensorWorldPose sensor_world_pose(const RobotState& state, const SensorPose<double>& pose) {
  const double c = std::cos(state.heading);
  const double s = std::sin(state.heading);
  const Eigen::Vector2d local = sensor_origin(pose);
  return {state.position + Eigen::Vector2d(c * local.x() - s * local.y(), s * local.x() + c * local.y()),
          wrap_angle(state.heading - pose.delta())};
}

}  // namespace acflow
