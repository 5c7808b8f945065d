#pragma once

// Static and moving geometry of the simulated environment (world frame, meters).

#include <Eigen/Core>

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace acflow {

struct Segment {
  Eigen::Vector2d a{0, 0};
  Eigen::Vector2d b{0, 0};
};

struct Circle {
  Eigen::Vector2d center{0, 0};
  double radius{0};
};

struct Waypoint {
  double t{0};
  Eigen::Vector2d position{0, 0};
};

/// Circle following a piecewise-linear schedule. With `cyclic` set the
/// schedule repeats; its first and last positions must then coincide.
struct MovingObject {
  double radius{0};
  std::vector<Waypoint> path;
  bool cyclic{false};

  Eigen::Vector2d position(double t) const;
  Circle at(double t) const { return {position(t), radius}; }
};

/// Endpoint shared by two or more walls.
struct Junction {
  Eigen::Vector2d point{0, 0};
  std::vector<double> wall_bearings;  // directions of the walls leaving the point, ascending
};

struct Rect {
  Eigen::Vector2d min{0, 0};
  Eigen::Vector2d max{0, 0};
};

struct WorldModel {
  std::string name;
  std::vector<Segment> walls;
  std::vector<Circle> circles;
  std::vector<MovingObject> movers;
  std::vector<Eigen::Vector2d> waypoints;
  Rect start_zone;
  double start_heading{0};         // radians, counter-clockwise from world x
  double start_heading_spread{0};  // half-width of the uniform heading draw

  // Derived from `walls` by index_walls(); world_from_json() calls it.
  std::vector<Junction> junctions;
  std::vector<std::array<bool, 2>> free_endpoints;  // per wall: a, b not part of a junction

  void index_walls();

  void validate() const;
  /// Circles plus movers at time t.
  std::vector<Circle> circles_at(double t) const;
  /// Axis-aligned box around all geometry, waypoints and the start zone.
  Rect bounds() const;
};

WorldModel world_from_json(const nlohmann::json& j);
nlohmann::json world_to_json(const WorldModel& world);
WorldModel load_world(const std::filesystem::path& path);

}  // namespace acflow
