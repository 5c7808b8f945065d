#pragma once

// Experiment runner: seeded single runs, batches over sensor configurations,
// trajectory heatmaps and threshold calibration.

#include "acflow/controller.hpp"
#include "acflow/sonar.hpp"
#include "acflow/vehicle.hpp"
#include "acflow/world.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace acflow {

struct RunConfig {
  std::string name;
  std::filesystem::path world_path;
  WorldModel world;
  std::vector<SensorPose<double>> sensors;
  ControllerConfig controller;
  GuidanceConfig guidance;
  SonarConfig sonar;
  RegionConfig regions;
  GridSpec grid;
  double robot_radius{0.2};
  double tick_hz{10};
  double max_time{600};
  std::uint64_t seed{1};
  int runs{15};

  void validate() const;
  std::size_t max_ticks() const;
};

/// Parses a configuration; a relative "world" path is resolved against base_dir.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
RunConfig load_config(const std::filesystem::path& path);

struct TrajectorySample {
  double t{0};
  Eigen::Vector2d position{0, 0};
  double heading{0};
  VelocityCommand command;
  ActiveLayer layer{ActiveLayer::None};
};

struct RunResult {
  std::uint64_t seed{0};
  std::vector<TrajectorySample> trajectory;  // one sample per tick, terminal tick included
  bool collided{false};
  bool completed{false};
  std::size_t waypoints_reached{0};
  std::string error;  // non-empty if the run could not be executed
  double wall_clock_s{0};
  double max_tick_ms{0};
  std::size_t slow_ticks{0};  // ticks over the 10 Hz real-time budget
};

/// Per-run seed from the master seed and the (configuration, repeat) cell.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t config_index, std::uint64_t run_index);

/// Executes one seeded run. Throws if the sampled start pose is in collision.
RunResult run_single(const RunConfig& cfg, std::uint64_t seed,
                     const ControlGeometry* geometry = nullptr);

struct Heatmap {
  Eigen::Vector2d origin{0, 0};
  double cell{0.05};
  Eigen::MatrixXi counts;  // rows: y cells, cols: x cells

  static Heatmap covering(const Rect& area, double cell, double margin);
  void add(const Eigen::Vector2d& p);
  std::int64_t total() const { return counts.cast<std::int64_t>().sum(); }
};

struct BatchReport {
  std::uint64_t master_seed{0};
  std::vector<std::string> config_names;
  std::vector<std::vector<RunResult>> runs;  // [config][repeat]
  Heatmap heatmap;

  std::size_t total_runs() const;
  std::size_t collisions() const;
  std::size_t completions() const;
  std::size_t errors() const;
  /// Deterministic summary (no wall-clock data).
  nlohmann::json summary() const;
};

BatchReport run_batch(std::span<const RunConfig> configs, std::uint64_t master_seed,
                      std::optional<int> runs_override = std::nullopt, double heatmap_cell = 0.05);

void write_trajectory_csv(std::ostream& os, const RunResult& run);
void write_heatmap_csv(std::ostream& os, const Heatmap& heatmap);
/// report.json, timing.json, heatmap.csv, heatmap.json and trajectories/.
void write_batch_outputs(const BatchReport& report, const std::filesystem::path& out_dir);

struct LayerCalibration {
  std::string layer;
  double noise_p99{0};
  double threshold{0};
  double echo_peak{0};
  bool pass{false};
};

struct CalibrationReport {
  std::vector<LayerCalibration> layers;
  bool ok() const;
  nlohmann::json to_json() const;
};

/// Checks noise_p99 < T_c < weakest relevant echo for each layer using
/// empty frames and single-feature calibration scenes.
CalibrationReport calibrate(const RunConfig& cfg, int noise_frames = 40);

/// Writes every mask and flow-line raster of the configuration as CSV.
void dump_masks(const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace acflow
