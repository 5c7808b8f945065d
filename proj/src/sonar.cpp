#include "acflow/sonar.hpp"

#include <algorithm>
#include <iterator>
#include <optional>
#include <cmath>
#include <random>

namespace acflow {

namespace {

constexpr double kTwoPi = 2 * std::numbers::pi;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

struct Visibility {
  const SensorWorldPose& sensor;
  const GridSpec& spec;
  double theta_lo;
  double theta_hi;

  Visibility(const SensorWorldPose& s, const GridSpec& g)
      : sensor(s),
        spec(g),
        theta_lo(g.azimuth_min - g.azimuth_step / 2),
        theta_hi(g.azimuth_max + g.azimuth_step / 2) {}

  void add(std::vector<EchoSource>& out, EchoKind kind, const Eigen::Vector2d& p,
           double strength) const {
    const PolarCoord<double> polar = sensor.to_sensor(p);
    if (!(polar.r > 0) || polar.r > spec.r_max) return;
    if (polar.theta < theta_lo || polar.theta > theta_hi) return;
    out.push_back({kind, p, strength, polar});
  }
};

// Classifies a junction as seen from `viewer`: concave wedge -> corner,
// reflex wedge -> convex edge, straight continuation -> nothing.
std::optional<EchoKind> junction_kind(const Junction& j, const Eigen::Vector2d& viewer) {
  const std::size_t n = j.wall_bearings.size();
  const Eigen::Vector2d v = viewer - j.point;
  if (v.norm() < 1e-12 || n < 2) return std::nullopt;
  double phi = std::atan2(v.y(), v.x());
  for (std::size_t i = 0; i < n; ++i) {
    const double lo = j.wall_bearings[i];
    const double hi = i + 1 < n ? j.wall_bearings[i + 1] : j.wall_bearings[0] + kTwoPi;
    double p = phi;
    while (p < lo) p += kTwoPi;
    if (p <= hi) {
      const double wedge = hi - lo;
      if (wedge < std::numbers::pi - 1e-3) return EchoKind::Corner;
      if (wedge > std::numbers::pi + 1e-3) return EchoKind::Edge;
      return std::nullopt;
    }
  }
  return std::nullopt;
}

}  // namespace

PolarCoord<double> SensorWorldPose::to_sensor(const Eigen::Vector2d& world_point) const {
  const Eigen::Vector2d w = world_point - origin;
  const double c = std::cos(axis_heading);
  const double s = std::sin(axis_heading);
  const double xs = w.x() * c + w.y() * s;
  const double ys = -w.x() * s + w.y() * c;
  return {w.norm(), std::atan2(-ys, xs), kHorizontalPhi<double>};
}

const char* echo_kind_name(EchoKind kind) {
  switch (kind) {
    case EchoKind::PlaneFoot: return "plane";
    case EchoKind::Edge: return "edge";
    case EchoKind::Corner: return "corner";
    case EchoKind::Circle: return "circle";
  }
  return "?";
}

std::vector<EchoSource> extract_echo_sources(const WorldModel& world, const SensorWorldPose& sensor,
                                             double t, const GridSpec& spec,
                                             const EchoStrengths& strengths) {
  std::vector<EchoSource> out;
  const Visibility vis(sensor, spec);
  const Eigen::Vector2d& o = sensor.origin;
  const bool indexed = world.free_endpoints.size() == world.walls.size();

  for (std::size_t n = 0; n < world.walls.size(); ++n) {
    const Segment& w = world.walls[n];
    const Eigen::Vector2d ab = w.b - w.a;
    const double u = (o - w.a).dot(ab) / ab.squaredNorm();
    if (u >= 0 && u <= 1) {
      vis.add(out, EchoKind::PlaneFoot, w.a + u * ab, strengths.plane);
    } else {
      if (!indexed || world.free_endpoints[n][0]) vis.add(out, EchoKind::Edge, w.a, strengths.edge);
      if (!indexed || world.free_endpoints[n][1]) vis.add(out, EchoKind::Edge, w.b, strengths.edge);
    }
  }
  for (const auto& j : world.junctions) {
    const auto kind = junction_kind(j, o);
    if (!kind) continue;
    vis.add(out, *kind, j.point, *kind == EchoKind::Corner ? strengths.corner : strengths.edge);
  }
  for (const auto& c : world.circles_at(t)) {
    const Eigen::Vector2d v = o - c.center;
    const double dist = v.norm();
    if (dist <= c.radius) continue;
    vis.add(out, EchoKind::Circle, c.center + c.radius * v / dist, strengths.circle);
  }
  return out;
}

bool line_of_sight_blocked(const Eigen::Vector2d& from, const Eigen::Vector2d& to,
                           const std::vector<Segment>& walls, const std::vector<Circle>& circles) {
  constexpr double kEndGap = 1e-6;  // meters excluded at both ends of the sight line
  const Eigen::Vector2d d = to - from;
  const double len = d.norm();
  if (len <= 2 * kEndGap) return false;
  const double s_lo = kEndGap / len;
  const double s_hi = 1 - s_lo;

  for (const auto& w : walls) {
    const Eigen::Vector2d e = w.b - w.a;
    const double denom = cross(d, e);
    if (std::abs(denom) < 1e-15) continue;
    const Eigen::Vector2d ap = w.a - from;
    const double s = cross(ap, e) / denom;
    const double u = cross(ap, d) / denom;
    if (s > s_lo && s < s_hi && u >= 0 && u <= 1) return true;
  }
  for (const auto& c : circles) {
    const double s = std::clamp((c.center - from).dot(d) / (len * len), s_lo, s_hi);
    if ((from + s * d - c.center).norm() < c.radius - 1e-9) return true;
  }
  return false;
}

std::vector<EchoSource> occlusion_filter(const std::vector<EchoSource>& sources,
                                         const WorldModel& world, const SensorWorldPose& sensor,
                                         double t) {
  const auto circles = world.circles_at(t);
  std::vector<EchoSource> out;
  out.reserve(sources.size());
  std::copy_if(sources.begin(), sources.end(), std::back_inserter(out), [&](const EchoSource& s) {
    return !line_of_sight_blocked(sensor.origin, s.position, world.walls, circles);
  });
  return out;
}

Energyscape render_energyscape(const std::vector<EchoSource>& sources, const GridSpec& spec,
                               const SonarConfig& cfg, std::uint64_t noise_seed,
                               int sensor_index) {
  Energyscape E = Energyscape::zeros(spec, sensor_index);
  const int n_az = spec.n_azimuth();
  const double two_sigma2 = 2 * cfg.psf_sigma * cfg.psf_sigma;
  const int half_window =
      cfg.psf_sigma > 0 ? static_cast<int>(std::ceil(4 * cfg.psf_sigma / spec.azimuth_step)) : 0;

  for (const auto& s : sources) {
    const auto i = spec.range_bin(s.polar.r);
    const auto kc = spec.azimuth_bin(s.polar.theta);
    if (!i || !kc) continue;
    const double amplitude =
        s.strength * std::min(1.0, std::pow(cfg.r_ref / s.polar.r, cfg.falloff_exponent));
    if (half_window == 0) {
      E.cells(*i, *kc) += amplitude;
      continue;
    }
    const int k0 = std::max(0, *kc - half_window);
    const int k1 = std::min(n_az - 1, *kc + half_window);
    for (int k = k0; k <= k1; ++k) {
      const double dt = spec.azimuth_center(k) - s.polar.theta;
      E.cells(*i, k) += amplitude * std::exp(-dt * dt / two_sigma2);
    }
  }

  if (cfg.noise_amplitude > 0) {
    std::mt19937_64 gen(noise_seed);
    const double a = cfg.noise_amplitude;
    const double scale = 2 * a / 4294967296.0;  // 2^32
    double* data = E.cells.data();
    const Eigen::Index n = E.cells.size();
    for (Eigen::Index c = 0; c < n; c += 2) {
      const std::uint64_t bits = gen();
      data[c] += static_cast<double>(bits >> 32) * scale - a;
      if (c + 1 < n) data[c + 1] += static_cast<double>(bits & 0xffffffffu) * scale - a;
    }
  }
  E.cells = E.cells.cwiseMax(0.0);
  return E;
}

}  // namespace acflow
