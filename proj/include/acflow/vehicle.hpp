#pragma once

// Differential-drive platform: kinematics, waypoint guidance, collisions.

#include "acflow/flow_model.hpp"
#include "acflow/sonar.hpp"
#include "acflow/velocity_command.hpp"
#include "acflow/world.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <span>

namespace acflow {

struct RobotState {
  Eigen::Vector2d position{0, 0};
  double heading{0};
  double radius{0.2};
};

/// Wraps an angle to [-pi, pi].
double wrap_angle(double a);

struct GuidanceConfig {
  double waypoint_capture_radius{0.3};
  double cruise_V{0.3};
  double heading_gain{1.0};
  double omega_limit{1.5};
};

struct GuidanceOutput {
  VelocityCommand command;
  std::size_t waypoint_index{0};  // target after this tick; == size() once finished
  bool finished{false};
};

/// Proportional heading law toward the current waypoint; advances the target
/// while the robot is inside the capture radius.
GuidanceOutput guidance_tick(const RobotState& state, std::span<const Eigen::Vector2d> waypoints,
                             std::size_t current_index, const GuidanceConfig& cfg);

/// Exact unicycle step for a command held constant over dt.
RobotState integrate_motion(const RobotState& state, const VelocityCommand& cmd, double dt);

struct Contact {
  bool collided{false};
  double clearance{0};               // distance from the robot rim to the nearest geometry
  Eigen::Vector2d nearest{0, 0};     // closest geometry point
};

/// Robot disc against walls, circles and movers at time t. Touching counts.
Contact check_collision(const RobotState& state, const WorldModel& world, double t);

Eigen::Vector2d closest_point_on_segment(const Segment& s, const Eigen::Vector2d& p);

SensorWorldPose sensor_world_pose(const RobotState& state, const SensorPose<double>& pose);

}  // namespace acflow
