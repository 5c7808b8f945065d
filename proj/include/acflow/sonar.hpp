#pragma once

// Geometric sonar simulation: specular / edge / corner echo extraction,
// line-of-sight occlusion and energyscape rendering.

#include "acflow/energyscape.hpp"
#include "acflow/world.hpp"

#include <cstdint>
#include <vector>

namespace acflow {

/// Sensor placement in the world frame.
struct SensorWorldPose {
  Eigen::Vector2d origin{0, 0};
  double axis_heading{0};  // counter-clockwise from world x

  /// Horizontal-plane sensor coordinates of a world point.
  PolarCoord<double> to_sensor(const Eigen::Vector2d& world_point) const;
};

enum class EchoKind { PlaneFoot, Edge, Corner, Circle };

const char* echo_kind_name(EchoKind kind);

struct EchoSource {
  EchoKind kind{EchoKind::PlaneFoot};
  Eigen::Vector2d position{0, 0};  // world frame
  double strength{1};
  PolarCoord<double> polar;  // as seen by the sensor it was extracted for
};

struct EchoStrengths {
  double plane{1.0};
  double circle{0.8};
  double corner{0.6};
  double edge{0.3};
};

struct SonarConfig {
  EchoStrengths strengths;
  double psf_sigma{3.0 * std::numbers::pi / 180};
  double noise_amplitude{0.02};
  double r_ref{1.0};
  double falloff_exponent{1.0};
};

/// Echo sources visible in range and inside the grid's azimuth coverage,
/// before occlusion.
std::vector<EchoSource> extract_echo_sources(const WorldModel& world, const SensorWorldPose& sensor,
                                             double t, const GridSpec& spec,
                                             const EchoStrengths& strengths = {});

/// True if the open segment (from, to) crosses a wall or enters a circle.
bool line_of_sight_blocked(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                           const std::vector<Segment>& walls, const std::vector<Circle>& circles);

std::vector<EchoSource> occlusion_filter(const std::vector<EchoSource>& sources,
                                         const WorldModel& world, const SensorWorldPose& sensor,
                                         double t);

Energyscape render_energyscape(const std::vector<EchoSource>& sources, const GridSpec& spec,
                               const SonarConfig& cfg, std::uint64_t noise_seed,
                               int sensor_index = 0);

}  // namespace acflow
