#include "acflow/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace acflow {

namespace {

using nlohmann::json;

constexpr double kDeg = std::numbers::pi / 180;

void reject_unknown(const json& j, const char* block, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw std::runtime_error(std::string(block) + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw std::runtime_error(std::string(block) + ": unknown key '" + key + "'");
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

void read_deg(const json& j, const char* key, double& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<double>() * kDeg;
}

ControllerConfig parse_controller(const json& j) {
  reject_unknown(j, "controller",
                 {"T_CA", "T_OA", "T_RCF", "T_AFF_single", "T_AFF_corr", "lambda_OA", "mu_OA",
                  "lambda_RCF", "lambda_AFF", "ca_omega", "ca_reverse_V", "ca_consecutive_needed",
                  "aff_consecutive_needed", "V_limit", "omega_limit", "noise_floor",
                  "ca_release_ratio"});
  ControllerConfig c;
  read(j, "T_CA", c.T_CA);
  read(j, "T_OA", c.T_OA);
  read(j, "T_RCF", c.T_RCF);
  read(j, "T_AFF_single", c.T_AFF_single);
  read(j, "T_AFF_corr", c.T_AFF_corr);
  read(j, "lambda_OA", c.lambda_OA);
  read(j, "mu_OA", c.mu_OA);
  read(j, "lambda_RCF", c.lambda_RCF);
  read(j, "lambda_AFF", c.lambda_AFF);
  read(j, "ca_omega", c.ca_omega);
  read(j, "ca_reverse_V", c.ca_reverse_V);
  read(j, "ca_consecutive_needed", c.ca_consecutive_needed);
  read(j, "aff_consecutive_needed", c.aff_consecutive_needed);
  read(j, "V_limit", c.V_limit);
  read(j, "omega_limit", c.omega_limit);
  read(j, "noise_floor", c.noise_floor);
  read(j, "ca_release_ratio", c.ca_release_ratio);
  return c;
}

GuidanceConfig parse_guidance(const json& j) {
  reject_unknown(j, "guidance", {"waypoint_capture_radius", "cruise_V", "heading_gain", "omega_limit"});
  GuidanceConfig g;
  read(j, "waypoint_capture_radius", g.waypoint_capture_radius);
  read(j, "cruise_V", g.cruise_V);
  read(j, "heading_gain", g.heading_gain);
  read(j, "omega_limit", g.omega_limit);
  return g;
}

SonarConfig parse_sonar(const json& j) {
  reject_unknown(j, "sonar",
                 {"plane", "circle", "corner", "edge", "psf_sigma_deg", "noise_amplitude", "r_ref",
                  "falloff_exponent"});
  SonarConfig s;
  read(j, "plane", s.strengths.plane);
  read(j, "circle", s.strengths.circle);
  read(j, "corner", s.strengths.corner);
  read(j, "edge", s.strengths.edge);
  read_deg(j, "psf_sigma_deg", s.psf_sigma);
  read(j, "noise_amplitude", s.noise_amplitude);
  read(j, "r_ref", s.r_ref);
  read(j, "falloff_exponent", s.falloff_exponent);
  return s;
}

RegionConfig parse_regions(const json& j) {
  reject_unknown(j, "regions",
                 {"ca_radius", "oa_near_half_width", "oa_far_half_width", "oa_length",
                  "oa_forward_offset", "rcf_theta_min_deg", "rcf_theta_max_deg", "rcf_r_min",
                  "rcf_r_max", "aff_d_min", "aff_d_max", "aff_d_step"});
  RegionConfig r;
  read(j, "ca_radius", r.ca_radius);
  read(j, "oa_near_half_width", r.oa_near_half_width);
  read(j, "oa_far_half_width", r.oa_far_half_width);
  read(j, "oa_length", r.oa_length);
  read(j, "oa_forward_offset", r.oa_forward_offset);
  read_deg(j, "rcf_theta_min_deg", r.rcf_theta_min);
  read_deg(j, "rcf_theta_max_deg", r.rcf_theta_max);
  read(j, "rcf_r_min", r.rcf_r_min);
  read(j, "rcf_r_max", r.rcf_r_max);
  read(j, "aff_d_min", r.aff_d_min);
  read(j, "aff_d_max", r.aff_d_max);
  read(j, "aff_d_step", r.aff_d_step);
  return r;
}

GridSpec parse_grid(const json& j) {
  reject_unknown(j, "grid",
                 {"r_max", "n_range", "azimuth_min_deg", "azimuth_max_deg", "azimuth_step_deg"});
  GridSpec g;
  read(j, "r_max", g.r_max);
  read(j, "n_range", g.n_range);
  read_deg(j, "azimuth_min_deg", g.azimuth_min);
  read_deg(j, "azimuth_max_deg", g.azimuth_max);
  read_deg(j, "azimuth_step_deg", g.azimuth_step);
  return g;
}

std::uint64_t frame_seed(std::uint64_t run_seed, std::uint64_t tick, std::uint64_t sensor) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(tick), static_cast<std::uint32_t>(tick >> 32),
                    static_cast<std::uint32_t>(sensor)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

std::vector<Energyscape> render_frames(const RunConfig& cfg, const WorldModel& world,
                                       const RobotState& robot, double t, std::uint64_t seed,
                                       std::uint64_t tick, bool noise = true) {
  SonarConfig sonar = cfg.sonar;
  if (!noise) sonar.noise_amplitude = 0;
  std::vector<Energyscape> frames;
  frames.reserve(cfg.sensors.size());
  for (std::size_t j = 0; j < cfg.sensors.size(); ++j) {
    const SensorWorldPose swp = sensor_world_pose(robot, cfg.sensors[j]);
    auto sources = extract_echo_sources(world, swp, t, cfg.grid, sonar.strengths);
    sources = occlusion_filter(sources, world, swp, t);
    frames.push_back(render_energyscape(sources, cfg.grid, sonar, frame_seed(seed, tick, j),
                                        static_cast<int>(j)));
  }
  return frames;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

double percentile99(std::vector<double> v) {
  if (v.empty()) return 0;
  const auto k = static_cast<std::size_t>(std::ceil(0.99 * static_cast<double>(v.size()))) - 1;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k), v.end());
  return v[k];
}

}  // namespace

void RunConfig::validate() const {
  if (sensors.empty() || sensors.size() > 3)
    throw std::invalid_argument("configuration needs between 1 and 3 sensors");
  for (const auto& s : sensors) {
    if (!(s.l >= 0)) throw std::invalid_argument("sensor lever arm must be non-negative");
  }
  if (!(tick_hz > 0)) throw std::invalid_argument("tick_hz must be positive");
  if (!(max_time > 0)) throw std::invalid_argument("max_time must be positive");
  if (!(robot_radius > 0)) throw std::invalid_argument("robot_radius must be positive");
  if (runs < 1) throw std::invalid_argument("runs must be at least 1");
  if (!(guidance.waypoint_capture_radius > 0 && guidance.cruise_V > 0 && guidance.heading_gain > 0 &&
        guidance.omega_limit > 0))
    throw std::invalid_argument("guidance parameters must be positive");
  if (!(sonar.psf_sigma > 0 && sonar.noise_amplitude >= 0 && sonar.r_ref > 0))
    throw std::invalid_argument("invalid sonar parameters");
  controller.validate();
  regions.validate();
  grid.validate();
  world.validate();
  if (world.waypoints.empty()) throw std::invalid_argument("world has no waypoints");
}

std::size_t RunConfig::max_ticks() const {
  return static_cast<std::size_t>(std::ceil(max_time * tick_hz - 1e-9));
}

RunConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  reject_unknown(j, "config",
                 {"name", "world", "sensors", "controller", "guidance", "sonar", "regions", "grid",
                  "robot_radius", "tick_hz", "max_time", "seed", "runs"});
  RunConfig c;
  read(j, "name", c.name);
  if (auto it = j.find("world"); it != j.end()) {
    std::filesystem::path p = it->get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    c.world_path = p.lexically_normal();
    c.world = load_world(c.world_path);
  }
  if (!j.contains("sensors") || !j.at("sensors").is_array())
    throw std::runtime_error("config: 'sensors' array is required");
  for (const auto& s : j.at("sensors")) {
    reject_unknown(s, "sensor", {"alpha_deg", "beta_deg", "l"});
    SensorPose<double> pose;
    pose.alpha = s.value("alpha_deg", 0.0) * kDeg;
    pose.beta = s.value("beta_deg", 0.0) * kDeg;
    pose.l = s.value("l", 0.0);
    c.sensors.push_back(pose);
  }
  if (j.contains("controller")) c.controller = parse_controller(j.at("controller"));
  if (j.contains("guidance")) c.guidance = parse_guidance(j.at("guidance"));
  if (j.contains("sonar")) c.sonar = parse_sonar(j.at("sonar"));
  if (j.contains("regions")) c.regions = parse_regions(j.at("regions"));
  if (j.contains("grid")) c.grid = parse_grid(j.at("grid"));
  read(j, "robot_radius", c.robot_radius);
  read(j, "tick_hz", c.tick_hz);
  read(j, "max_time", c.max_time);
  read(j, "seed", c.seed);
  read(j, "runs", c.runs);
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("cannot parse config " + path.string() + ": " + e.what());
  }
  RunConfig c = config_from_json(j, path.parent_path());
  if (c.name.empty()) c.name = path.stem().string();
  return c;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t config_index, std::uint64_t run_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(config_index), static_cast<std::uint32_t>(run_index)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

RunResult run_single(const RunConfig& cfg, std::uint64_t seed, const ControlGeometry* geometry) {
  cfg.validate();
  std::optional<ControlGeometry> own;
  if (!geometry) {
    own.emplace(cfg.sensors, cfg.regions, cfg.grid);
    geometry = &*own;
  }

  RunResult result;
  result.seed = seed;
  const auto wall_start = std::chrono::steady_clock::now();

  std::mt19937_64 gen(seed);
  const Rect& zone = cfg.world.start_zone;
  std::uniform_real_distribution<double> ux(zone.min.x(), zone.max.x());
  std::uniform_real_distribution<double> uy(zone.min.y(), zone.max.y());
  std::uniform_real_distribution<double> uh(-cfg.world.start_heading_spread,
                                            cfg.world.start_heading_spread);
  RobotState robot;
  robot.radius = cfg.robot_radius;
  robot.position = {ux(gen), uy(gen)};
  robot.heading = wrap_angle(cfg.world.start_heading + uh(gen));
  if (const Contact c = check_collision(robot, cfg.world, 0); c.collided) {
    throw std::runtime_error("start pose (" + fmt(robot.position.x()) + ", " +
                             fmt(robot.position.y()) + ") is in collision, clearance " +
                             fmt(c.clearance));
  }

  Controller controller(*geometry, cfg.controller);
  const double dt = 1.0 / cfg.tick_hz;
  const std::size_t max_ticks = cfg.max_ticks();
  std::size_t target = 0;
  result.trajectory.reserve(std::min<std::size_t>(max_ticks, 1 << 16));

  for (std::size_t k = 0; k < max_ticks; ++k) {
    const double t = static_cast<double>(k) * dt;
    TrajectorySample sample{t, robot.position, robot.heading, {}, ActiveLayer::None};
    if (k > 0 && check_collision(robot, cfg.world, t).collided) {
      result.collided = true;
      result.trajectory.push_back(sample);
      break;
    }
    const auto tick_start = std::chrono::steady_clock::now();
    const GuidanceOutput g = guidance_tick(robot, cfg.world.waypoints, target, cfg.guidance);
    target = g.waypoint_index;
    if (g.finished) {
      result.completed = true;
      result.trajectory.push_back(sample);
      break;
    }
    const auto frames = render_frames(cfg, cfg.world, robot, t, seed, k);
    const LayerDecision d = controller.tick(frames, g.command);
    const double tick_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - tick_start).count();
    result.max_tick_ms = std::max(result.max_tick_ms, tick_ms);
    if (tick_ms > 100) ++result.slow_ticks;

    sample.command = d.command;
    sample.layer = d.layer;
    result.trajectory.push_back(sample);
    robot = integrate_motion(robot, d.command, dt);
  }
  result.waypoints_reached = target;
  result.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  if (result.slow_ticks > 0) {
    std::cerr << "warning: " << cfg.name << " seed " << seed << ": " << result.slow_ticks
              << " ticks exceeded the 100 ms budget (max " << fmt(result.max_tick_ms) << " ms)\n";
  }
  return result;
}

Heatmap Heatmap::covering(const Rect& area, double cell, double margin) {
  if (!(cell > 0)) throw std::invalid_argument("heatmap cell must be positive");
  Heatmap h;
  h.cell = cell;
  h.origin = area.min - Eigen::Vector2d::Constant(margin);
  const Eigen::Vector2d extent = area.max - area.min + Eigen::Vector2d::Constant(2 * margin);
  const auto nx = static_cast<Eigen::Index>(std::ceil(extent.x() / cell));
  const auto ny = static_cast<Eigen::Index>(std::ceil(extent.y() / cell));
  h.counts = Eigen::MatrixXi::Zero(std::max<Eigen::Index>(ny, 1), std::max<Eigen::Index>(nx, 1));
  return h;
}

void Heatmap::add(const Eigen::Vector2d& p) {
  const Eigen::Vector2d q = (p - origin) / cell;
  const auto ix = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(q.x())), 0,
                                           counts.cols() - 1);
  const auto iy = std::clamp<Eigen::Index>(static_cast<Eigen::Index>(std::floor(q.y())), 0,
                                           counts.rows() - 1);
  ++counts(iy, ix);
}

std::size_t BatchReport::total_runs() const {
  std::size_t n = 0;
  for (const auto& r : runs) n += r.size();
  return n;
}

std::size_t BatchReport::collisions() const {
  std::size_t n = 0;
  for (const auto& rs : runs)
    for (const auto& r : rs) n += r.collided;
  return n;
}

std::size_t BatchReport::completions() const {
  std::size_t n = 0;
  for (const auto& rs : runs)
    for (const auto& r : rs) n += r.completed;
  return n;
}

std::size_t BatchReport::errors() const {
  std::size_t n = 0;
  for (const auto& rs : runs)
    for (const auto& r : rs) n += !r.error.empty();
  return n;
}

json BatchReport::summary() const {
  json configs = json::array();
  for (std::size_t c = 0; c < runs.size(); ++c) {
    json list = json::array();
    std::size_t coll = 0, comp = 0, err = 0;
    for (const auto& r : runs[c]) {
      coll += r.collided;
      comp += r.completed;
      err += !r.error.empty();
      json e{{"seed", r.seed},
             {"collided", r.collided},
             {"completed", r.completed},
             {"waypoints_reached", r.waypoints_reached},
             {"ticks", r.trajectory.size()}};
      if (!r.trajectory.empty()) {
        const auto& f = r.trajectory.back();
        e["final_pose"] = {f.position.x(), f.position.y(), f.heading};
        e["sim_time"] = f.t;
      }
      if (!r.error.empty()) e["error"] = r.error;
      list.push_back(std::move(e));
    }
    configs.push_back({{"name", config_names[c]},
                       {"runs", runs[c].size()},
                       {"collisions", coll},
                       {"completions", comp},
                       {"errors", err},
                       {"results", std::move(list)}});
  }
  const std::size_t n = total_runs();
  return {{"master_seed", master_seed},
          {"total_runs", n},
          {"collisions", collisions()},
          {"completions", completions()},
          {"errors", errors()},
          {"completion_rate", n ? static_cast<double>(completions()) / static_cast<double>(n) : 0.0},
          {"heatmap_total", heatmap.total()},
          {"configs", std::move(configs)}};
}

BatchReport run_batch(std::span<const RunConfig> configs, std::uint64_t master_seed,
                      std::optional<int> runs_override, double heatmap_cell) {
  if (configs.empty()) throw std::invalid_argument("batch needs at least one configuration");
  BatchReport report;
  report.master_seed = master_seed;

  Rect area = configs.front().world.bounds();
  for (const auto& c : configs) {
    const Rect b = c.world.bounds();
    area.min = area.min.cwiseMin(b.min);
    area.max = area.max.cwiseMax(b.max);
  }
  report.heatmap = Heatmap::covering(area, heatmap_cell, 0.5);

  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const RunConfig& cfg = configs[ci];
    report.config_names.push_back(cfg.name);
    auto& results = report.runs.emplace_back();
    const int n = runs_override.value_or(cfg.runs);
    std::optional<ControlGeometry> geom;
    std::string setup_error;
    try {
      cfg.validate();
      geom.emplace(cfg.sensors, cfg.regions, cfg.grid);
    } catch (const std::exception& e) {
      setup_error = e.what();
    }
    for (int ri = 0; ri < n; ++ri) {
      const std::uint64_t seed = derive_seed(master_seed, ci, static_cast<std::uint64_t>(ri));
      RunResult r;
      r.seed = seed;
      if (!setup_error.empty()) {
        r.error = setup_error;
      } else {
        try {
          r = run_single(cfg, seed, &*geom);
        } catch (const std::exception& e) {
          r = RunResult{};
          r.seed = seed;
          r.error = e.what();
        }
      }
      for (const auto& s : r.trajectory) report.heatmap.add(s.position);
      results.push_back(std::move(r));
    }
  }
  return report;
}

void write_trajectory_csv(std::ostream& os, const RunResult& run) {
  os << "t,x,y,heading,V_o,omega_o,active_layer\n";
  for (const auto& s : run.trajectory) {
    os << fmt(s.t) << ',' << fmt(s.position.x()) << ',' << fmt(s.position.y()) << ','
       << fmt(s.heading) << ',' << fmt(s.command.V) << ',' << fmt(s.command.omega) << ','
       << active_layer_name(s.layer) << '\n';
  }
}

void write_heatmap_csv(std::ostream& os, const Heatmap& heatmap) {
  for (Eigen::Index y = 0; y < heatmap.counts.rows(); ++y) {
    for (Eigen::Index x = 0; x < heatmap.counts.cols(); ++x) {
      if (x) os << ',';
      os << heatmap.counts(y, x);
    }
    os << '\n';
  }
}

void write_batch_outputs(const BatchReport& report, const std::filesystem::path& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir / "trajectories");
  auto open = [](const fs::path& p) {
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    return f;
  };
  {
    auto f = open(out_dir / "report.json");
    f << report.summary().dump(2) << '\n';
  }
  {
    auto f = open(out_dir / "heatmap.csv");
    write_heatmap_csv(f, report.heatmap);
  }
  {
    auto f = open(out_dir / "heatmap.json");
    json meta{{"origin", {report.heatmap.origin.x(), report.heatmap.origin.y()}},
              {"cell", report.heatmap.cell},
              {"rows", report.heatmap.counts.rows()},
              {"cols", report.heatmap.counts.cols()},
              {"row_axis", "y"},
              {"total", report.heatmap.total()}};
    f << meta.dump(2) << '\n';
  }
  json timing = json::array();
  for (std::size_t c = 0; c < report.runs.size(); ++c) {
    for (std::size_t r = 0; r < report.runs[c].size(); ++r) {
      const RunResult& run = report.runs[c][r];
      char name[64];
      std::snprintf(name, sizeof name, "%03zu.csv", r);
      auto f = open(out_dir / "trajectories" / (report.config_names[c] + "_" + name));
      write_trajectory_csv(f, run);
      timing.push_back({{"config", report.config_names[c]},
                        {"run", r},
                        {"wall_clock_s", run.wall_clock_s},
                        {"max_tick_ms", run.max_tick_ms},
                        {"slow_ticks", run.slow_ticks}});
    }
  }
  auto f = open(out_dir / "timing.json");
  f << timing.dump(2) << '\n';
}

bool CalibrationReport::ok() const {
  return std::all_of(layers.begin(), layers.end(), [](const auto& l) { return l.pass; });
}

json CalibrationReport::to_json() const {
  json rows = json::array();
  for (const auto& l : layers) {
    rows.push_back({{"layer", l.layer},
                    {"noise_p99", l.noise_p99},
                    {"threshold", l.threshold},
                    {"echo_peak", l.echo_peak},
                    {"margin_low", l.threshold - l.noise_p99},
                    {"margin_high", l.echo_peak - l.threshold},
                    {"pass", l.pass}});
  }
  return {{"ok", ok()}, {"layers", rows}};
}

CalibrationReport calibrate(const RunConfig& cfg, int noise_frames) {
  cfg.validate();
  if (noise_frames < 1) throw std::invalid_argument("noise_frames must be positive");
  const ControlGeometry geom(cfg.sensors, cfg.regions, cfg.grid);
  const RobotState robot{{0, 0}, 0, cfg.robot_radius};
  const Layer region_layers[] = {Layer::CA, Layer::OA, Layer::RCF};

  // Noise statistics on an empty scene.
  WorldModel empty;
  std::vector<double> noise[3];
  std::vector<double> gamma_noise;
  for (int f = 0; f < noise_frames; ++f) {
    const auto frames = render_frames(cfg, empty, robot, 0, cfg.seed, static_cast<std::uint64_t>(f));
    for (int l = 0; l < 3; ++l) {
      for (std::size_t j = 0; j < frames.size(); ++j) {
        for (const Eigen::Index idx : geom.cells(j, region_layers[l]).index)
          noise[l].push_back(frames[j].cells(idx));
      }
    }
    const AffProfile p = aff_detect(frames, geom, cfg.controller);
    gamma_noise.push_back(p.gamma.empty() ? 0.0 : *std::max_element(p.gamma.begin(), p.gamma.end()));
  }

  // Weakest relevant echo: a diffracting edge near the far side of each
  // region, checked on both sides of the platform.
  auto edge_peak = [&](Layer layer, const Eigen::Vector2d& left_point) {
    double worst = std::numeric_limits<double>::infinity();
    for (const double side : {1.0, -1.0}) {
      const Eigen::Vector2d p(left_point.x(), side * left_point.y());
      double best = 0;
      for (std::size_t j = 0; j < cfg.sensors.size(); ++j) {
        const SensorWorldPose swp = sensor_world_pose(robot, cfg.sensors[j]);
        EchoSource s{EchoKind::Edge, p, cfg.sonar.strengths.edge, swp.to_sensor(p)};
        if (!cfg.grid.range_bin(s.polar.r) || !cfg.grid.azimuth_bin(s.polar.theta)) continue;
        SonarConfig quiet = cfg.sonar;
        quiet.noise_amplitude = 0;
        const Energyscape E = render_energyscape({s}, cfg.grid, quiet, 0, static_cast<int>(j));
        for (const Eigen::Index idx : geom.cells(j, layer).index) best = std::max(best, E.cells(idx));
      }
      worst = std::min(worst, best);
    }
    return worst;
  };
  const RegionConfig& rg = cfg.regions;
  const double rcf_mid = 0.5 * (rg.rcf_theta_min + rg.rcf_theta_max);
  const double rcf_r = rg.rcf_r_min + 0.9 * (rg.rcf_r_max - rg.rcf_r_min);
  const double echo[3] = {
      edge_peak(Layer::CA, 0.8 * rg.ca_radius * Eigen::Vector2d(std::cos(0.5), std::sin(0.5))),
      edge_peak(Layer::OA, {rg.oa_forward_offset + 0.9 * rg.oa_length, 0.1}),
      edge_peak(Layer::RCF, rcf_r * Eigen::Vector2d(std::cos(rcf_mid), std::sin(rcf_mid)))};

  // Lone wall at the farthest distance the alignment profile must resolve.
  double wall_gamma = std::numeric_limits<double>::infinity();
  const double d_wall = std::min(2.0, rg.aff_d_max);
  for (const double side : {1.0, -1.0}) {
    WorldModel w;
    w.walls.push_back({{-6, side * d_wall}, {8, side * d_wall}});
    w.index_walls();
    const auto frames = render_frames(cfg, w, robot, 0, cfg.seed, 0, false);
    const AffProfile p = aff_detect(frames, geom, cfg.controller);
    wall_gamma = std::min(wall_gamma, p.gamma.empty() ? 0.0 : *std::max_element(p.gamma.begin(), p.gamma.end()));
  }

  CalibrationReport report;
  const double thresholds[3] = {cfg.controller.T_CA, cfg.controller.T_OA, cfg.controller.T_RCF};
  for (int l = 0; l < 3; ++l) {
    LayerCalibration c{layer_name(region_layers[l]), percentile99(noise[l]), thresholds[l], echo[l]};
    c.pass = c.noise_p99 < c.threshold && c.threshold < c.echo_peak;
    report.layers.push_back(c);
  }
  const double g99 = percentile99(gamma_noise);
  for (const auto& [name, T] : {std::pair{"AFF_single", cfg.controller.T_AFF_single},
                                std::pair{"AFF_corr", cfg.controller.T_AFF_corr}}) {
    LayerCalibration c{name, g99, T, wall_gamma};
    c.pass = c.noise_p99 < c.threshold && c.threshold < c.echo_peak;
    report.layers.push_back(c);
  }
  return report;
}

void dump_masks(const RunConfig& cfg, const std::filesystem::path& out_dir) {
  cfg.validate();
  const ControlGeometry geom(cfg.sensors, cfg.regions, cfg.grid);
  std::filesystem::create_directories(out_dir);
  for (std::size_t j = 0; j < cfg.sensors.size(); ++j) {
    for (const Layer l : {Layer::CA, Layer::OA, Layer::RCF}) {
      std::ofstream f(out_dir / ("sensor" + std::to_string(j) + "_" + layer_name(l) + ".csv"));
      write_csv(f, geom.mask(j, l));
    }
    const auto& rasters = geom.sensors()[j].aff;
    for (std::size_t i = 0; i < rasters.size(); ++i) {
      char name[64];
      std::snprintf(name, sizeof name, "sensor%zu_AFF_d%+.2f.csv", j, geom.aff_distances()[i]);
      std::ofstream f(out_dir / name);
      write_csv(f, rasters[i]);
    }
  }
}

}  // namespace acflow
