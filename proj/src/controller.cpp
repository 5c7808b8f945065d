#include "acflow/controller.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace acflow {

void RegionConfig::validate() const {
  if (!(ca_radius > 0)) throw std::invalid_argument("ca_radius must be positive");
  if (!(oa_length > 0) || oa_near_half_width < 0 || oa_far_half_width < 0) {
    throw std::invalid_argument("invalid OA trapezoid");
  }
  if (!(rcf_theta_max > rcf_theta_min) || !(rcf_r_max > rcf_r_min)) {
    throw std::invalid_argument("invalid RCF wedge");
  }
  if (!(aff_d_min > 0) || !(aff_d_max >= aff_d_min) || !(aff_d_step > 0)) {
    throw std::invalid_argument("invalid AFF lateral-distance grid");
  }
}

ControlRegion RegionConfig::ca_region() const {
  return {{CircleRegion{{0, 0}, ca_radius}}};
}

ControlRegion RegionConfig::oa_region() const {
  return {{TrapezoidRegion{oa_near_half_width, oa_far_half_width, oa_length, oa_forward_offset}}};
}

ControlRegion RegionConfig::rcf_region() const {
  return {{WedgeRegion{rcf_theta_min, rcf_theta_max, rcf_r_min, rcf_r_max},
           WedgeRegion{-rcf_theta_max, -rcf_theta_min, rcf_r_min, rcf_r_max}}};
}

std::vector<double> RegionConfig::aff_distances() const {
  const int n = static_cast<int>(std::floor((aff_d_max - aff_d_min) / aff_d_step + 1e-9)) + 1;
  std::vector<double> out;
  out.reserve(2 * n);
  for (int i = n - 1; i >= 0; --i) out.push_back(-(aff_d_min + i * aff_d_step));
  for (int i = 0; i < n; ++i) out.push_back(aff_d_min + i * aff_d_step);
  return out;
}

void ControllerConfig::validate() const {
  for (double t : {T_CA, T_OA, T_RCF, T_AFF_single, T_AFF_corr}) {
    if (!(t > 0)) throw std::invalid_argument("controller thresholds must be positive");
  }
  if (ca_consecutive_needed < 1 || aff_consecutive_needed < 1) {
    throw std::invalid_argument("consecutive counts must be at least 1");
  }
  if (!(V_limit > 0) || !(omega_limit > 0)) throw std::invalid_argument("limits must be positive");
  if (noise_floor < 0) throw std::invalid_argument("noise_floor must be non-negative");
}

const char* active_layer_name(ActiveLayer layer) {
  switch (layer) {
    case ActiveLayer::CA: return "CA";
    case ActiveLayer::OA: return "OA";
    case ActiveLayer::RCF: return "RCF";
    case ActiveLayer::AFF: return "AFF";
    case ActiveLayer::None: return "none";
  }
  return "?";
}

namespace {

// Cells centred exactly on the platform axis carry the mask's tie-break value,
// but they steer neither way: their sign in the sums is 0.
ControlGeometry::SparseCells sparse_cells(const TernaryMask& m, const SensorPose<double>& pose) {
  ControlGeometry::SparseCells out;
  for (Eigen::Index c = 0; c < m.cells.size(); ++c) {
    const std::int8_t v = m.cells.data()[c];
    if (v == 0) continue;
    const auto i = static_cast<int>(c % m.cells.rows());
    const auto k = static_cast<int>(c / m.cells.rows());
    const double r = m.spec.range_center(i);
    const bool on_axis = sensor_to_platform(pose, r, m.spec.azimuth_center(k)).y() == 0;
    out.index.push_back(c);
    out.sign.push_back(on_axis ? 0.0 : v);
    out.inv_r2.push_back(1.0 / (r * r));
  }
  return out;
}

ControlGeometry::SparseRaster sparse_raster(const RasterFlowLine& f) {
  ControlGeometry::SparseRaster out;
  for (const auto& [i, k] : f.cells) {
    out.index.push_back(static_cast<Eigen::Index>(k) * f.spec.n_range + i);
    out.sqrt_r.push_back(std::sqrt(f.spec.range_center(i)));
  }
  return out;
}

}  // namespace

ControlGeometry::ControlGeometry(std::vector<SensorPose<double>> poses, const RegionConfig& regions,
                                 const GridSpec& grid)
    : poses_(std::move(poses)), grid_(grid), distances_(regions.aff_distances()) {
  regions.validate();
  grid_.validate();
  const auto ca = regions.ca_region();
  const auto oa = regions.oa_region();
  const auto rcf = regions.rcf_region();
  sensors_.reserve(poses_.size());
  for (std::size_t j = 0; j < poses_.size(); ++j) {
    const int idx = static_cast<int>(j);
    SensorMasks s{build_region_mask(ca, poses_[j], grid_, Layer::CA, idx),
                  build_region_mask(oa, poses_[j], grid_, Layer::OA, idx),
                  build_region_mask(rcf, poses_[j], grid_, Layer::RCF, idx),
                  {}, {}, {}, {}, {}};
    for (double d : distances_)
      s.aff.push_back(rasterize_flow_band(poses_[j], d, regions.aff_d_step, grid_, idx));
    s.ca_cells = sparse_cells(s.ca, poses_[j]);
    s.oa_cells = sparse_cells(s.oa, poses_[j]);
    s.rcf_cells = sparse_cells(s.rcf, poses_[j]);
    for (const auto& f : s.aff) s.aff_cells.push_back(sparse_raster(f));
    sensors_.push_back(std::move(s));
  }
}

const TernaryMask& ControlGeometry::mask(std::size_t sensor, Layer layer) const {
  const auto& s = sensors_.at(sensor);
  switch (layer) {
    case Layer::CA: return s.ca;
    case Layer::OA: return s.oa;
    case Layer::RCF: return s.rcf;
    case Layer::AFF: break;
  }
  throw std::invalid_argument("AFF uses flow-line rasters, not a region mask");
}

const ControlGeometry::SparseCells& ControlGeometry::cells(std::size_t sensor, Layer layer) const {
  const auto& s = sensors_.at(sensor);
  switch (layer) {
    case Layer::CA: return s.ca_cells;
    case Layer::OA: return s.oa_cells;
    case Layer::RCF: return s.rcf_cells;
    case Layer::AFF: break;
  }
  throw std::invalid_argument("AFF uses flow-line rasters, not a region mask");
}

namespace {

void require_frames(Frames E, const ControlGeometry& geom) {
  if (E.size() != geom.sensors().size()) {
    throw std::invalid_argument("one energyscape per sensor expected");
  }
  for (const auto& e : E) {
    if (!(e.spec == geom.grid())) throw std::invalid_argument("energyscape grid mismatch");
  }
}

}  // namespace

LayerSums layer_sums(Frames E, const ControlGeometry& geom, Layer layer, double threshold,
                     double noise_floor) {
  require_frames(E, geom);
  LayerSums out;
  for (std::size_t j = 0; j < E.size(); ++j) {
    const auto& cells = geom.cells(j, layer);
    const double* data = E[j].cells.data();
    for (std::size_t n = 0; n < cells.index.size(); ++n) {
      const double e = data[cells.index[n]];
      if (e > threshold) out.active = true;
      if (e <= noise_floor) continue;
      out.signed_sum += e * cells.sign[n];
      out.weighted += e * cells.sign[n] * cells.inv_r2[n];
      out.absolute += e;
    }
  }
  return out;
}

CaResult ca_layer(Frames E, const ControlGeometry& geom, const ControllerConfig& cfg,
                  const ControllerState& state, const VelocityCommand& input) {
  CaResult out{std::nullopt, state};
  const LayerSums sums = layer_sums(E, geom, Layer::CA, cfg.T_CA, cfg.noise_floor);
  bool hold = false;
  if (!sums.active && state.ca_latched) {
    hold = layer_sums(E, geom, Layer::CA, cfg.T_CA * cfg.ca_release_ratio, cfg.noise_floor).active;
  }
  if (!sums.active && !hold) {
    out.state.ca_consecutive = 0;
    out.state.ca_latched = false;
    out.state.ca_turn_sign = 0;
    return out;
  }
  if (!state.ca_latched) {
    // Turn away from the side holding most of the masked energy. A balanced
    // region keeps the turn direction of the input, or turns right.
    if (std::abs(sums.signed_sum) > 1e-9 * sums.absolute) {
      out.state.ca_turn_sign = sums.signed_sum > 0 ? -1 : 1;
    } else {
      out.state.ca_turn_sign = input.omega > 0 ? 1 : -1;
    }
  }
  out.state.ca_latched = true;
  out.state.ca_consecutive = state.ca_consecutive + 1;
  const double V = out.state.ca_consecutive >= cfg.ca_consecutive_needed ? cfg.ca_reverse_V : 0.0;
  out.command = VelocityCommand{V, out.state.ca_turn_sign * cfg.ca_omega};
  return out;
}

std::optional<VelocityCommand> oa_layer(Frames E, const ControlGeometry& geom,
                                        const ControllerConfig& cfg, const VelocityCommand& input) {
  const LayerSums s = layer_sums(E, geom, Layer::OA, cfg.T_OA, cfg.noise_floor);
  if (!s.active) return std::nullopt;
  const double ratio = s.absolute > 0 ? s.weighted / s.absolute : 0.0;
  const double factor = std::clamp(1.0 - cfg.mu_OA * s.absolute, 0.0, 1.0);
  return VelocityCommand{input.V * factor, input.omega - cfg.lambda_OA * ratio};
}

std::optional<VelocityCommand> rcf_layer(Frames E, const ControlGeometry& geom,
                                         const ControllerConfig& cfg, const VelocityCommand& input) {
  const LayerSums s = layer_sums(E, geom, Layer::RCF, cfg.T_RCF, cfg.noise_floor);
  if (!s.active) return std::nullopt;
  const double ratio = s.absolute > 0 ? s.weighted / s.absolute : 0.0;
  return VelocityCommand{input.V, input.omega - cfg.lambda_RCF * ratio};
}

AffProfile aff_detect(Frames E, const ControlGeometry& geom, const ControllerConfig& cfg) {
  require_frames(E, geom);
  AffProfile out;
  out.d = geom.aff_distances();
  out.gamma.assign(out.d.size(), 0.0);
  for (std::size_t j = 0; j < E.size(); ++j) {
    const double* data = E[j].cells.data();
    const auto& rasters = geom.sensors()[j].aff_cells;
    for (std::size_t n = 0; n < out.d.size(); ++n) {
      const auto& f = rasters[n];
      if (f.index.empty()) continue;
      double sum = 0;
      for (std::size_t c = 0; c < f.index.size(); ++c) {
        const double e = data[f.index[c]];
        if (e > cfg.noise_floor) sum += e * f.sqrt_r[c];
      }
      out.gamma[n] += sum / static_cast<double>(f.index.size());
    }
  }
  // Strict interior local maxima, each side of d = 0 scanned on its own.
  const double floor = std::min(cfg.T_AFF_single, cfg.T_AFF_corr);
  const std::size_t half = out.d.size() / 2;
  auto scan = [&](std::size_t begin, std::size_t end) {
    for (std::size_t n = begin + 1; n + 1 < end; ++n) {
      const double g = out.gamma[n];
      if (g > out.gamma[n - 1] && g > out.gamma[n + 1] && g > floor) {
        out.peaks.push_back({out.d[n], g});
      }
    }
  };
  scan(0, half);
  scan(half, out.d.size());
  return out;
}

AffResult aff_layer(std::span<const AffPeak> peaks, const ControllerConfig& cfg,
                    const ControllerState& state, const VelocityCommand& input) {
  AffResult out{std::nullopt, state};
  const AffPeak* left = nullptr;
  const AffPeak* right = nullptr;
  const AffPeak* single = nullptr;
  for (const auto& p : peaks) {
    if (p.gamma > cfg.T_AFF_corr) {
      const AffPeak*& side = p.d > 0 ? left : right;
      if (!side || p.gamma > side->gamma) side = &p;
    }
    if (p.gamma > cfg.T_AFF_single && (!single || p.gamma > single->gamma)) single = &p;
  }

  if (left && right) {
    out.state.d_p.reset();
    out.state.aff_consecutive = state.aff_consecutive + 1;
    out.command = VelocityCommand{input.V, input.omega + cfg.lambda_AFF * (left->d - (-right->d))};
    return out;
  }
  if (!single) {
    out.state.d_p.reset();
    out.state.aff_consecutive = 0;
    return out;
  }
  out.state.aff_consecutive = state.aff_consecutive + 1;
  double omega = input.omega;
  const bool same_wall = state.d_p && (*state.d_p > 0) == (single->d > 0);
  if (same_wall && out.state.aff_consecutive >= cfg.aff_consecutive_needed) {
    omega += cfg.lambda_AFF * (single->d - *state.d_p);
  }
  out.state.d_p = single->d;
  out.command = VelocityCommand{input.V, omega};
  return out;
}

LayerDecision arbitrate(const LayerOutputs& outputs, const VelocityCommand& input,
                        const ControllerConfig& cfg) {
  LayerDecision out{ActiveLayer::None, input};
  if (outputs.ca) {
    out = {ActiveLayer::CA, *outputs.ca};
  } else if (outputs.oa) {
    out = {ActiveLayer::OA, *outputs.oa};
  } else if (outputs.rcf) {
    out = {ActiveLayer::RCF, *outputs.rcf};
  } else if (outputs.aff) {
    out = {ActiveLayer::AFF, *outputs.aff};
  }
  out.command = out.command.clamped(cfg.V_limit, cfg.omega_limit);
  return out;
}

Controller::Controller(const ControlGeometry& geom, ControllerConfig cfg)
    : geom_(&geom), cfg_(std::move(cfg)) {
  cfg_.validate();
}

LayerDecision Controller::tick(Frames E, const VelocityCommand& input) {
  const CaResult ca = ca_layer(E, *geom_, cfg_, state_, input);
  outputs_ = {};
  outputs_.ca = ca.command;
  outputs_.oa = oa_layer(E, *geom_, cfg_, input);
  outputs_.rcf = rcf_layer(E, *geom_, cfg_, input);
  profile_ = aff_detect(E, *geom_, cfg_);
  const AffResult aff = aff_layer(profile_.peaks, cfg_, ca.state, input);
  outputs_.aff = aff.command;
  state_ = aff.state;
  return arbitrate(outputs_, input, cfg_);
}

}  // namespace acflow
