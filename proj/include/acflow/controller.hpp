#pragma once

// Four-layer subsumption controller (collision avoidance, obstacle
// avoidance, reactive corridor following, acoustic flow following) fusing
// the energyscapes of every mounted sonar.

#include "acflow/energyscape.hpp"
#include "acflow/velocity_command.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace acflow {

/// Platform-frame control-region dimensions and the lateral-distance grid.
struct RegionConfig {
  double ca_radius{0.5};
  double oa_near_half_width{0.3};
  double oa_far_half_width{0.6};
  double oa_length{1.5};
  double oa_forward_offset{0.2};
  double rcf_theta_min{25 * std::numbers::pi / 180};
  double rcf_theta_max{90 * std::numbers::pi / 180};
  double rcf_r_min{0.3};
  double rcf_r_max{3.0};
  double aff_d_min{0.3};
  double aff_d_max{2.5};
  double aff_d_step{0.1};

  void validate() const;
  ControlRegion ca_region() const;
  ControlRegion oa_region() const;
  ControlRegion rcf_region() const;
  /// Signed lateral distances, ascending: -d_max ... -d_min, d_min ... d_max.
  std::vector<double> aff_distances() const;
};

struct ControllerConfig {
  double T_CA{0.15};
  double T_OA{0.10};
  double T_RCF{0.08};
  double T_AFF_single{0.001};
  double T_AFF_corr{0.001};
  double lambda_OA{1.0};
  double mu_OA{1.0};
  double lambda_RCF{1.0};
  double lambda_AFF{1.0};
  double ca_omega{0.5};
  double ca_reverse_V{-0.1};
  int ca_consecutive_needed{4};
  int aff_consecutive_needed{2};
  double V_limit{0.3};
  double omega_limit{1.5};
  /// Cells at or below this energy are left out of the steering sums.
  double noise_floor{0.03};
  /// A latched CA episode ends once no CA cell exceeds T_CA * ca_release_ratio.
  double ca_release_ratio{0.5};

  void validate() const;
};

struct ControllerState {
  int ca_consecutive{0};
  int aff_consecutive{0};
  std::optional<double> d_p;
  bool ca_latched{false};
  int ca_turn_sign{0};

  bool operator==(const ControllerState&) const = default;
};

enum class ActiveLayer { CA, OA, RCF, AFF, None };

const char* active_layer_name(ActiveLayer layer);

struct LayerDecision {
  ActiveLayer layer{ActiveLayer::None};
  VelocityCommand command;
};

/// Masks and flow-line rasters for every sensor, built once per sensor set.
class ControlGeometry {
 public:
  struct SparseCells {
    std::vector<Eigen::Index> index;  // linear (column-major) cell index
    std::vector<double> sign;
    std::vector<double> inv_r2;
  };
  struct SparseRaster {
    std::vector<Eigen::Index> index;
    std::vector<double> sqrt_r;
  };
  struct SensorMasks {
    TernaryMask ca, oa, rcf;
    std::vector<RasterFlowLine> aff;  // one per entry of aff_distances()
    SparseCells ca_cells, oa_cells, rcf_cells;
    std::vector<SparseRaster> aff_cells;
  };

  ControlGeometry(std::vector<SensorPose<double>> poses, const RegionConfig& regions,
                  const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  const std::vector<SensorPose<double>>& poses() const { return poses_; }
  const std::vector<double>& aff_distances() const { return distances_; }
  const std::vector<SensorMasks>& sensors() const { return sensors_; }
  const TernaryMask& mask(std::size_t sensor, Layer layer) const;
  const SparseCells& cells(std::size_t sensor, Layer layer) const;

 private:
  std::vector<SensorPose<double>> poses_;
  GridSpec grid_;
  std::vector<double> distances_;
  std::vector<SensorMasks> sensors_;
};

using Frames = std::span<const Energyscape>;

/// Fused masked quantities of one layer over all sensors.
struct LayerSums {
  bool active{false};     // some cell has E * |M| above the threshold
  double signed_sum{0};   // sum E * M
  double weighted{0};     // sum E * M / r^2
  double absolute{0};     // sum E * |M|
};

LayerSums layer_sums(Frames E, const ControlGeometry& geom, Layer layer, double threshold,
                     double noise_floor);

struct CaResult {
  std::optional<VelocityCommand> command;
  ControllerState state;
};

CaResult ca_layer(Frames E, const ControlGeometry& geom, const ControllerConfig& cfg,
                  const ControllerState& state, const VelocityCommand& input);

std::optional<VelocityCommand> oa_layer(Frames E, const ControlGeometry& geom,
                                        const ControllerConfig& cfg, const VelocityCommand& input);

std::optional<VelocityCommand> rcf_layer(Frames E, const ControlGeometry& geom,
                                         const ControllerConfig& cfg, const VelocityCommand& input);

struct AffPeak {
  double d{0};
  double gamma{0};
};

struct AffProfile {
  std::vector<double> d;
  std::vector<double> gamma;
  std::vector<AffPeak> peaks;
};

/// Fused alignment profile over the lateral-distance grid and its peaks.
AffProfile aff_detect(Frames E, const ControlGeometry& geom, const ControllerConfig& cfg);

struct AffResult {
  std::optional<VelocityCommand> command;
  ControllerState state;
};

AffResult aff_layer(std::span<const AffPeak> peaks, const ControllerConfig& cfg,
                    const ControllerState& state, const VelocityCommand& input);

struct LayerOutputs {
  std::optional<VelocityCommand> ca, oa, rcf, aff;
};

LayerDecision arbitrate(const LayerOutputs& outputs, const VelocityCommand& input,
                        const ControllerConfig& cfg);

/// Stateful wrapper running every layer each tick and arbitrating.
class Controller {
 public:
  Controller(const ControlGeometry& geom, ControllerConfig cfg);

  LayerDecision tick(Frames E, const VelocityCommand& input);

  const ControllerState& state() const { return state_; }
  const AffProfile& last_profile() const { return profile_; }
  const LayerOutputs& last_outputs() const { return outputs_; }

 private:
  const ControlGeometry* geom_;
  ControllerConfig cfg_;
  ControllerState state_;
  AffProfile profile_;
  LayerOutputs outputs_;
};

}  // namespace acflow
