#pragma once

// Polar sonar images, control-region masks and flow-line rasters.

#include "acflow/flow_model.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace acflow {

struct GridSpec {
  double r_max{5.0};
  int n_range{200};
  double azimuth_min{-std::numbers::pi / 2};
  double azimuth_max{std::numbers::pi / 2};
  double azimuth_step{std::numbers::pi / 180};

  void validate() const;

  int n_azimuth() const;
  double range_step() const { return r_max / n_range; }
  double range_center(int i) const { return (i + 0.5) * range_step(); }
  double azimuth_center(int k) const;

  /// Range bin holding r, or nullopt if r is outside (0, r_max].
  std::optional<int> range_bin(double r) const;
  /// Azimuth bin whose cell holds theta, or nullopt outside the grid.
  std::optional<int> azimuth_bin(double theta) const;

  /// Continuous cell coordinates (range index, azimuth index) of a point.
  Eigen::Vector2d index_coordinates(double r, double theta) const;

  bool operator==(const GridSpec&) const = default;
};

using EnergyGrid = Eigen::MatrixXd;  // rows: range bins, cols: azimuth bins
using TernaryGrid = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

struct Energyscape {
  GridSpec spec;
  EnergyGrid cells;
  int sensor_index{0};

  static Energyscape zeros(const GridSpec& spec, int sensor_index = 0);
};

enum class Layer { CA, OA, RCF, AFF };

const char* layer_name(Layer layer);

struct TernaryMask {
  GridSpec spec;
  TernaryGrid cells;
  Layer layer{Layer::CA};
  int sensor_index{0};
};

// Control-region primitives, all in the platform frame (x forward, y left).

struct CircleRegion {
  Eigen::Vector2d center{0, 0};
  double radius{0};
};

struct RectangleRegion {
  double x_min{0}, x_max{0};
  double y_min{0}, y_max{0};
};

/// Symmetric about the platform x-axis, spanning x in [offset, offset + length].
struct TrapezoidRegion {
  double near_half_width{0};
  double far_half_width{0};
  double length{0};
  double forward_offset{0};
};

/// Bearing and distance measured from the platform centre.
struct WedgeRegion {
  double theta_min{0}, theta_max{0};
  double r_min{0}, r_max{0};
};

using RegionShape = std::variant<CircleRegion, RectangleRegion, TrapezoidRegion, WedgeRegion>;

/// Union of primitive shapes.
struct ControlRegion {
  std::vector<RegionShape> parts;

  bool contains(const Eigen::Vector2d& p) const;
  ControlRegion mirrored() const;
};

bool region_contains(const RegionShape& shape, const Eigen::Vector2d& p);

/// +1 for platform-left (y >= 0, the x-axis breaks ties to the left), -1 for right.
inline std::int8_t side_of(const Eigen::Vector2d& p) { return p.y() >= 0 ? 1 : -1; }

TernaryMask build_region_mask(const ControlRegion& region, const SensorPose<double>& pose,
                              const GridSpec& spec, Layer layer = Layer::CA,
                              int sensor_index = 0);

struct RasterFlowLine {
  GridSpec spec;
  std::vector<std::pair<int, int>> cells;  // (range bin, azimuth bin), sorted, unique
  double d{0};
  int sensor_index{0};

  bool empty() const { return cells.empty(); }
};

/// Cells crossed by the linear-motion flow-line of a wall parallel to the
/// platform x-axis at signed lateral offset d (left positive).
RasterFlowLine rasterize_flow_line(const SensorPose<double>& pose, double d, const GridSpec& spec,
                                   int sensor_index = 0);

/// Union of the flow-line rasters for lateral offsets spread evenly over
/// [d - width/2, d + width/2], spaced at most half a range bin apart.
RasterFlowLine rasterize_flow_band(const SensorPose<double>& pose, double d, double width,
                                   const GridSpec& spec, int sensor_index = 0);

/// Marks every cell a polyline in (r, theta) passes through.
std::vector<std::pair<int, int>> rasterize_polyline(const std::vector<PolarCoord<double>>& points,
                                                    const GridSpec& spec);

double masked_sum(const Energyscape& E, const TernaryMask& M);

struct InverseSquareTerms {
  double weighted{0};  // sum of E * M / r^2
  double absolute{0};  // sum of E * |M|
};

InverseSquareTerms masked_inverse_r2_terms(const Energyscape& E, const TernaryMask& M);

/// Inverse-square weighted ternary sum over the absolute masked energy.
double masked_inverse_r2_ratio(const Energyscape& E, const TernaryMask& M);

/// Mean sqrt(r)-weighted energy along a rasterised flow-line.
double gamma(const Energyscape& E, const RasterFlowLine& F);

void write_csv(std::ostream& os, const TernaryMask& mask);
void write_csv(std::ostream& os, const RasterFlowLine& raster);
void write_csv(std::ostream& os, const Energyscape& E);

}  // namespace acflow
