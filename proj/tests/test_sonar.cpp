#include "acflow/sonar.hpp"
#include "acflow/vehicle.hpp"
#include "acflow/world.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <random>

using namespace acflow;

namespace {

constexpr double pi = std::numbers::pi;

SonarConfig quiet() {
  SonarConfig c;
  c.noise_amplitude = 0;
  return c;
}

EchoSource point(double r, double theta, double strength = 1.0) {
  return {EchoKind::Circle, {0, 0}, strength, {r, theta}};
}

WorldModel walls(std::vector<Segment> s) {
  WorldModel w;
  w.walls = std::move(s);
  w.index_walls();
  return w;
}

int count(const std::vector<EchoSource>& v, EchoKind k) {
  return static_cast<int>(std::count_if(v.begin(), v.end(), [&](const auto& s) { return s.kind == k; }));
}

}  // namespace

TEST_CASE("no sources and no noise render nothing") {
  const auto E = render_energyscape({}, GridSpec{}, quiet(), 1);
  CHECK(E.cells.maxCoeff() == 0);
  CHECK(E.cells.minCoeff() == 0);
}

TEST_CASE("unit source at 1 m peaks at 1.0 in its cell") {
  const GridSpec g;
  const auto E = render_energyscape({point(1.0, 0.0)}, g, quiet(), 1);
  Eigen::Index i, k;
  CHECK(E.cells.maxCoeff(&i, &k) == doctest::Approx(1.0));
  CHECK(i == *g.range_bin(1.0));
  CHECK(k == *g.azimuth_bin(0.0));
}

TEST_CASE("amplitude falls off as 1/r") {
  const GridSpec g;
  const double a = render_energyscape({point(1.0, 0.1)}, g, quiet(), 1).cells.maxCoeff();
  const double b = render_energyscape({point(2.0, 0.1)}, g, quiet(), 1).cells.maxCoeff();
  CHECK(b == doctest::Approx(a / 2));
}

TEST_CASE("symmetric sources render a mirror-symmetric energyscape") {
  const GridSpec g;
  const auto E = render_energyscape({point(1.5, pi / 6), point(1.5, -pi / 6)}, g, quiet(), 1);
  const int n = g.n_azimuth();
  for (int k = 0; k < n; ++k) CHECK((E.cells.col(k) - E.cells.col(n - 1 - k)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("noise is seeded, bounded and non-negative") {
  const GridSpec g;
  SonarConfig c;
  const auto a = render_energyscape({point(2.0, 0.3)}, g, c, 42);
  const auto b = render_energyscape({point(2.0, 0.3)}, g, c, 42);
  const auto d = render_energyscape({point(2.0, 0.3)}, g, c, 43);
  CHECK(a.cells == b.cells);
  CHECK(a.cells != d.cells);
  CHECK(a.cells.minCoeff() >= 0);
  const auto empty = render_energyscape({}, g, c, 7);
  CHECK(empty.cells.maxCoeff() <= c.noise_amplitude);
  CHECK(empty.cells.maxCoeff() > 0.5 * c.noise_amplitude);
}

TEST_CASE("wall seen head-on gives a plane echo at its foot") {
  const auto w = walls({{{2, -3}, {2, 3}}});
  const SensorWorldPose s{{0, 0}, 0};
  const auto src = extract_echo_sources(w, s, 0, GridSpec{});
  REQUIRE(count(src, EchoKind::PlaneFoot) == 1);
  CHECK(src[0].position.isApprox(Eigen::Vector2d(2, 0)));
  CHECK(src[0].polar.r == doctest::Approx(2));
  CHECK(src[0].polar.theta == doctest::Approx(0).epsilon(1e-12));
}

TEST_CASE("sensor azimuth is clockwise") {
  const SensorWorldPose s{{0, 0}, 0};
  CHECK(s.to_sensor({1, -1}).theta == doctest::Approx(pi / 4));
  CHECK(s.to_sensor({1, 1}).theta == doctest::Approx(-pi / 4));
}

TEST_CASE("wall whose foot lies off the segment shows its free ends as edges") {
  const auto w = walls({{{2, 1}, {2, 3}}});
  const auto src = extract_echo_sources(w, SensorWorldPose{{0, 0}, 0}, 0, GridSpec{});
  CHECK(count(src, EchoKind::PlaneFoot) == 0);
  CHECK(count(src, EchoKind::Edge) == 2);
}

TEST_CASE("concave corner and convex edge at junctions") {
  // Corner of a room seen from inside.
  const auto room = walls({{{3, -2}, {3, 2}}, {{3, 2}, {-1, 2}}});
  const auto a = extract_echo_sources(room, SensorWorldPose{{0, 0}, pi / 4}, 0, GridSpec{});
  CHECK(count(a, EchoKind::Corner) == 1);
  // The same junction from outside the wedge is a convex edge.
  const auto b = extract_echo_sources(room, SensorWorldPose{{4, 3}, -3 * pi / 4}, 0, GridSpec{});
  CHECK(count(b, EchoKind::Corner) == 0);
  CHECK(count(b, EchoKind::Edge) == 1);
  // Collinear continuation is not a reflector.
  const auto line = walls({{{2, -2}, {2, 0.5}}, {{2, 0.5}, {2, 6}}});
  const auto c = extract_echo_sources(line, SensorWorldPose{{0, 0}, 0}, 0, GridSpec{});
  CHECK(count(c, EchoKind::Corner) + count(c, EchoKind::Edge) == 0);
}

TEST_CASE("sources outside range or behind the sensor are dropped") {
  const auto far = walls({{{6, -1}, {6, 1}}});
  CHECK(extract_echo_sources(far, SensorWorldPose{{0, 0}, 0}, 0, GridSpec{}).empty());
  const auto behind = walls({{{-2, -1}, {-2, 1}}});
  CHECK(extract_echo_sources(behind, SensorWorldPose{{0, 0}, 0}, 0, GridSpec{}).empty());
}

TEST_CASE("circle echo sits on the near rim") {
  WorldModel w;
  w.circles.push_back({{2, 0}, 0.5});
  const auto src = extract_echo_sources(w, SensorWorldPose{{0, 0}, 0}, 0, GridSpec{});
  REQUIRE(src.size() == 1);
  CHECK(src[0].position.isApprox(Eigen::Vector2d(1.5, 0)));
}

TEST_CASE("occlusion by walls and circles") {
  auto w = walls({{{1, -1}, {1, 1}}, {{3, -1}, {3, 1}}});
  const SensorWorldPose s{{0, 0}, 0};
  auto src = occlusion_filter(extract_echo_sources(w, s, 0, GridSpec{}), w, s, 0);
  REQUIRE(src.size() == 1);
  CHECK(src[0].position.x() == doctest::Approx(1));

  WorldModel c;
  c.circles.push_back({{1, 0}, 0.2});
  c.circles.push_back({{3, 0}, 0.2});
  src = occlusion_filter(extract_echo_sources(c, s, 0, GridSpec{}), c, s, 0);
  REQUIRE(src.size() == 1);
  CHECK(src[0].position.x() == doctest::Approx(0.8));
}

TEST_CASE("a mover hides a wall exactly while it crosses the sight line") {
  WorldModel w = walls({{{3, -2}, {3, 2}}});
  MovingObject m;
  m.radius = 0.2;
  m.path = {{0, {1.5, -2}}, {4, {1.5, 2}}};
  w.movers.push_back(m);
  const SensorWorldPose s{{0, 0}, 0};
  for (double t = 0; t <= 4; t += 0.05) {
    const auto src = occlusion_filter(extract_echo_sources(w, s, t, GridSpec{}), w, s, t);
    const bool wall_seen = count(src, EchoKind::PlaneFoot) == 1;
    const Eigen::Vector2d c = m.position(t);
    const bool blocked = oracle::sampled_distance({0, 0}, {3, 0}, c) < m.radius - 1e-3;
    const bool clear = oracle::sampled_distance({0, 0}, {3, 0}, c) > m.radius + 1e-3;
    if (blocked) CHECK(!wall_seen);
    if (clear) CHECK(wall_seen);
  }
}

TEST_CASE("line of sight agrees with a segment-crossing oracle") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<Segment> ws;
  for (int i = 0; i < 6; ++i) ws.push_back({{u(gen), u(gen)}, {u(gen), u(gen)}});
  int checked = 0;
  for (int n = 0; n < 2000; ++n) {
    const Eigen::Vector2d a(u(gen), u(gen)), b(u(gen), u(gen));
    bool want = false;
    for (const auto& w : ws) want = want || oracle::segments_cross(a, b, w.a, w.b);
    CHECK(line_of_sight_blocked(a, b, ws, {}) == want);
    ++checked;
  }
  CHECK(checked == 2000);
}

TEST_CASE("world JSON round trip and mover schedules") {
  const auto j = nlohmann::json::parse(R"({
    "name": "t",
    "walls": [[0,0,4,0],[4,0,4,3]],
    "circles": [{"center":[1,1],"radius":0.2}],
    "movers": [{"radius":0.3,"cyclic":true,"path":[[0,0,0],[2,2,0],[4,0,0]]}],
    "waypoints": [[1,2],[3,2]],
    "start_zone": {"min":[0,1],"max":[1,2]},
    "start_heading_deg": 90,
    "start_heading_spread_deg": 10
  })");
  const WorldModel w = world_from_json(j);
  CHECK(w.walls.size() == 2);
  CHECK(w.junctions.size() == 1);
  CHECK(w.start_heading == doctest::Approx(pi / 2));
  CHECK(w.movers[0].position(1).isApprox(Eigen::Vector2d(1, 0)));
  CHECK(w.movers[0].position(5).isApprox(Eigen::Vector2d(1, 0)));
  CHECK(w.circles_at(1).size() == 2);
  const WorldModel back = world_from_json(world_to_json(w));
  CHECK(back.walls[1].b.isApprox(w.walls[1].b));
  CHECK(back.start_heading_spread == doctest::Approx(w.start_heading_spread));
  CHECK(back.movers[0].cyclic);
}

TEST_CASE("malformed worlds are rejected") {
  CHECK_THROWS(world_from_json(nlohmann::json::parse(R"({"walls": [[0,0,0,0]]})")));
  CHECK_THROWS(world_from_json(nlohmann::json::parse(
      R"({"movers": [{"radius":0.3,"cyclic":true,"path":[[0,0,0],[2,2,0]]}]})")));
  CHECK_THROWS(load_world("/nonexistent/world.json"));
}
