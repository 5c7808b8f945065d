#include "acflow/world.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

namespace acflow {

namespace {

constexpr double kDeg = std::numbers::pi / 180;

bool finite(const Eigen::Vector2d& v) { return v.allFinite(); }

Eigen::Vector2d vec2(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

nlohmann::json to_json(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }

}  // namespace

Eigen::Vector2d MovingObject::position(double t) const {
  if (path.empty()) throw std::logic_error("mover without a path");
  if (path.size() == 1) return path.front().position;
  const double t0 = path.front().t;
  const double t1 = path.back().t;
  if (cyclic && t > t1) t = t0 + std::fmod(t - t0, t1 - t0);
  if (t <= t0) return path.front().position;
  if (t >= t1) return path.back().position;
  const auto it = std::upper_bound(path.begin(), path.end(), t,
                                   [](double v, const Waypoint& w) { return v < w.t; });
  const Waypoint& b = *it;
  const Waypoint& a = *(it - 1);
  const double f = (t - a.t) / (b.t - a.t);
  return a.position + f * (b.position - a.position);
}

void WorldModel::index_walls() {
  constexpr double kTol = 1e-6;
  junctions.clear();
  free_endpoints.assign(walls.size(), {true, true});
  struct End {
    std::size_t wall;
    int which;
  };
  std::vector<bool> used(walls.size() * 2, false);
  auto point = [&](const End& e) { return e.which == 0 ? walls[e.wall].a : walls[e.wall].b; };
  auto other = [&](const End& e) { return e.which == 0 ? walls[e.wall].b : walls[e.wall].a; };
  for (std::size_t n = 0; n < walls.size() * 2; ++n) {
    if (used[n]) continue;
    const End e{n / 2, static_cast<int>(n % 2)};
    std::vector<End> group{e};
    for (std::size_t m = n + 1; m < walls.size() * 2; ++m) {
      const End f{m / 2, static_cast<int>(m % 2)};
      if (!used[m] && (point(f) - point(e)).norm() < kTol) {
        group.push_back(f);
        used[m] = true;
      }
    }
    if (group.size() < 2) continue;
    Junction j;
    j.point = point(e);
    for (const auto& g : group) {
      free_endpoints[g.wall][g.which] = false;
      const Eigen::Vector2d d = other(g) - point(g);
      j.wall_bearings.push_back(std::atan2(d.y(), d.x()));
    }
    std::sort(j.wall_bearings.begin(), j.wall_bearings.end());
    junctions.push_back(std::move(j));
  }
}

void WorldModel::validate() const {
  for (const auto& w : walls) {
    if (!finite(w.a) || !finite(w.b)) throw std::invalid_argument("wall with non-finite endpoint");
    if ((w.a - w.b).norm() < 1e-9) throw std::invalid_argument("zero-length wall");
  }
  for (const auto& c : circles) {
    if (!finite(c.center) || !(c.radius > 0)) throw std::invalid_argument("invalid circle");
  }
  for (const auto& m : movers) {
    if (m.path.empty() || !(m.radius > 0)) throw std::invalid_argument("invalid mover");
    for (std::size_t i = 0; i < m.path.size(); ++i) {
      if (!finite(m.path[i].position) || !std::isfinite(m.path[i].t)) {
        throw std::invalid_argument("mover path is not finite");
      }
      if (i > 0 && !(m.path[i].t > m.path[i - 1].t)) {
        throw std::invalid_argument("mover schedule times must increase");
      }
    }
    if (m.cyclic && (m.path.size() < 2 ||
                     (m.path.front().position - m.path.back().position).norm() > 1e-9)) {
      throw std::invalid_argument("cyclic mover path must end where it starts");
    }
  }
  for (const auto& w : waypoints) {
    if (!finite(w)) throw std::invalid_argument("non-finite waypoint");
  }
  if (!(start_zone.max.array() >= start_zone.min.array()).all()) {
    throw std::invalid_argument("start zone min exceeds max");
  }
}

std::vector<Circle> WorldModel::circles_at(double t) const {
  std::vector<Circle> out = circles;
  out.reserve(circles.size() + movers.size());
  for (const auto& m : movers) out.push_back(m.at(t));
  return out;
}

Rect WorldModel::bounds() const {
  Eigen::Vector2d lo = start_zone.min;
  Eigen::Vector2d hi = start_zone.max;
  auto grow = [&](const Eigen::Vector2d& p, double pad) {
    lo = lo.cwiseMin(p - Eigen::Vector2d::Constant(pad));
    hi = hi.cwiseMax(p + Eigen::Vector2d::Constant(pad));
  };
  for (const auto& w : walls) {
    grow(w.a, 0);
    grow(w.b, 0);
  }
  for (const auto& c : circles) grow(c.center, c.radius);
  for (const auto& m : movers) {
    for (const auto& p : m.path) grow(p.position, m.radius);
  }
  for (const auto& w : waypoints) grow(w, 0);
  return {lo, hi};
}

WorldModel world_from_json(const nlohmann::json& j) {
  WorldModel w;
  w.name = j.value("name", "");
  for (const auto& s : j.value("walls", nlohmann::json::array())) {
    if (!s.is_array() || s.size() != 4) throw std::invalid_argument("wall must be [x1, y1, x2, y2]");
    w.walls.push_back({{s[0].get<double>(), s[1].get<double>()},
                       {s[2].get<double>(), s[3].get<double>()}});
  }
  for (const auto& c : j.value("circles", nlohmann::json::array())) {
    w.circles.push_back({vec2(c.at("center")), c.at("radius").get<double>()});
  }
  for (const auto& m : j.value("movers", nlohmann::json::array())) {
    MovingObject mo;
    mo.radius = m.at("radius").get<double>();
    mo.cyclic = m.value("cyclic", false);
    for (const auto& p : m.at("path")) {
      if (!p.is_array() || p.size() != 3) throw std::invalid_argument("mover path entry is [t, x, y]");
      mo.path.push_back({p[0].get<double>(), {p[1].get<double>(), p[2].get<double>()}});
    }
    w.movers.push_back(std::move(mo));
  }
  for (const auto& p : j.value("waypoints", nlohmann::json::array())) w.waypoints.push_back(vec2(p));
  if (j.contains("start_zone")) {
    w.start_zone = {vec2(j["start_zone"].at("min")), vec2(j["start_zone"].at("max"))};
  }
  w.start_heading = j.value("start_heading_deg", 0.0) * kDeg;
  w.start_heading_spread = j.value("start_heading_spread_deg", 0.0) * kDeg;
  w.validate();
  w.index_walls();
  return w;
}

nlohmann::json world_to_json(const WorldModel& world) {
  nlohmann::json j;
  j["name"] = world.name;
  j["walls"] = nlohmann::json::array();
  for (const auto& s : world.walls) j["walls"].push_back({s.a.x(), s.a.y(), s.b.x(), s.b.y()});
  j["circles"] = nlohmann::json::array();
  for (const auto& c : world.circles) {
    j["circles"].push_back({{"center", to_json(c.center)}, {"radius", c.radius}});
  }
  j["movers"] = nlohmann::json::array();
  for (const auto& m : world.movers) {
    nlohmann::json path = nlohmann::json::array();
    for (const auto& p : m.path) path.push_back({p.t, p.position.x(), p.position.y()});
    j["movers"].push_back({{"radius", m.radius}, {"cyclic", m.cyclic}, {"path", path}});
  }
  j["waypoints"] = nlohmann::json::array();
  for (const auto& p : world.waypoints) j["waypoints"].push_back(to_json(p));
  j["start_zone"] = {{"min", to_json(world.start_zone.min)}, {"max", to_json(world.start_zone.max)}};
  j["start_heading_deg"] = world.start_heading / kDeg;
  j["start_heading_spread_deg"] = world.start_heading_spread / kDeg;
  return j;
}

WorldModel load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open world file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("malformed world file " + path.string() + ": " + e.what());
  }
  WorldModel w = world_from_json(j);
  if (w.name.empty()) w.name = path.stem().string();
  return w;
}

}  // namespace acflow
