#pragma once

// Small helpers shared by the controller, harness and acceptance tests.

#include "acflow/controller.hpp"
#include "acflow/harness.hpp"
#include "acflow/sonar.hpp"
#include "acflow/vehicle.hpp"

#include <string>
#include <vector>

namespace scene {

inline std::string config_path(int setup) {
  char name[32];
  std::snprintf(name, sizeof name, "/configs/setup%02d.json", setup);
  return std::string(ACFLOW_SOURCE_DIR) + name;
}

inline std::vector<acflow::SensorPose<double>> table_poses(int setup) {
  return acflow::load_config(config_path(setup)).sensors;
}

inline acflow::WorldModel with_walls(std::vector<acflow::Segment> walls,
                                     std::vector<acflow::Circle> circles = {}) {
  acflow::WorldModel w;
  w.walls = std::move(walls);
  w.circles = std::move(circles);
  w.index_walls();
  return w;
}

/// One energyscape per sensor for a robot at `robot` in `world`.
inline std::vector<acflow::Energyscape> frames(const acflow::WorldModel& world,
                                               const std::vector<acflow::SensorPose<double>>& poses,
                                               const acflow::RobotState& robot,
                                               acflow::SonarConfig sonar = {}, std::uint64_t seed = 0,
                                               double t = 0) {
  std::vector<acflow::Energyscape> out;
  for (std::size_t j = 0; j < poses.size(); ++j) {
    const auto swp = acflow::sensor_world_pose(robot, poses[j]);
    auto src = acflow::extract_echo_sources(world, swp, t, acflow::GridSpec{}, sonar.strengths);
    src = acflow::occlusion_filter(src, world, swp, t);
    out.push_back(acflow::render_energyscape(src, acflow::GridSpec{}, sonar, seed + j, static_cast<int>(j)));
  }
  return out;
}

inline acflow::SonarConfig quiet() {
  acflow::SonarConfig s;
  s.noise_amplitude = 0;
  return s;
}

}  // namespace scene
