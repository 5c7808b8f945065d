#include "acflow/harness.hpp"
#include "scene.hpp"

#include <doctest.h>

#include <fstream>
#include <sstream>

using namespace acflow;

namespace {

RunConfig open_field() {
  RunConfig c;
  c.name = "open";
  c.sensors = {{0, 0, 0}};
  c.world.waypoints = {{1.0, 0.0}};
  c.world.start_zone = {{0, 0}, {0, 0}};
  c.max_time = 20;
  return c;
}

RunConfig sealed_box() {
  RunConfig c = open_field();
  c.name = "box";
  c.world.walls = {{{-1.5, -1.5}, {1.5, -1.5}}, {{1.5, -1.5}, {1.5, 1.5}},
                   {{1.5, 1.5}, {-1.5, 1.5}}, {{-1.5, 1.5}, {-1.5, -1.5}}};
  c.world.index_walls();
  c.world.waypoints = {{5, 0}};
  c.max_time = 30;
  return c;
}

}  // namespace

TEST_CASE("shipped configurations parse") {
  for (int s = 1; s <= 10; ++s) {
    const RunConfig c = load_config(scene::config_path(s));
    CHECK(!c.sensors.empty());
    CHECK(c.sensors.size() <= 3);
    CHECK(!c.world.walls.empty());
    CHECK(c.runs == 15);
  }
  const auto one = scene::table_poses(1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].alpha == 0);
  CHECK(one[0].beta == 0);
}

TEST_CASE("unknown configuration keys are rejected") {
  const auto j = nlohmann::json::parse(R"({"name":"x","sensors":[{"alpha_deg":0,"beta_deg":0,"l":0}],
                                          "controller":{"T_CAA":0.1}})");
  CHECK_THROWS(config_from_json(j, "."));
  const auto k = nlohmann::json::parse(R"({"name":"x","sensor":[]})");
  CHECK_THROWS(config_from_json(k, "."));
}

TEST_CASE("open field: straight run to a waypoint 1 m ahead") {
  const RunResult r = run_single(open_field(), 1);
  CHECK(r.completed);
  CHECK(!r.collided);
  CHECK(r.error.empty());
  CHECK(r.waypoints_reached == 1);
  for (const auto& s : r.trajectory) {
    CHECK(std::abs(s.position.y()) < 1e-12);
    CHECK(s.heading == 0);
  }
  // 0.7 m to the capture circle at 0.3 m per second.
  CHECK(r.trajectory.size() == 25);
  CHECK(r.trajectory.back().position.x() >= 0.7 - 1e-9);
}

TEST_CASE("sealed box times out without a collision") {
  const RunConfig c = sealed_box();
  const RunResult r = run_single(c, 3);
  CHECK(!r.completed);
  CHECK(!r.collided);
  CHECK(r.trajectory.size() == c.max_ticks());
}

TEST_CASE("a mover driving into a parked robot ends the run in contact") {
  RunConfig c = open_field();
  c.world.waypoints = {{0, 10}};
  c.guidance.cruise_V = 1e-6;
  c.guidance.omega_limit = 1e-6;
  c.controller.V_limit = 1e-6;
  c.controller.omega_limit = 1e-6;
  MovingObject m;
  m.radius = 0.3;
  m.path = {{0, {4, 0}}, {10, {-6, 0}}};
  c.world.movers.push_back(m);
  const RunResult r = run_single(c, 1);
  CHECK(r.collided);
  const auto& last = r.trajectory.back();
  RobotState s{last.position, last.heading, c.robot_radius};
  CHECK(check_collision(s, c.world, last.t).collided);
  for (std::size_t i = 0; i + 1 < r.trajectory.size(); ++i) {
    RobotState p{r.trajectory[i].position, r.trajectory[i].heading, c.robot_radius};
    CHECK(!check_collision(p, c.world, r.trajectory[i].t).collided);
  }
}

TEST_CASE("start inside an obstacle is an error") {
  RunConfig c = open_field();
  c.world.circles.push_back({{0, 0}, 0.1});
  CHECK_THROWS(run_single(c, 1));
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, 0, 0) == derive_seed(1, 0, 0));
  CHECK(derive_seed(1, 0, 0) != derive_seed(1, 0, 1));
  CHECK(derive_seed(1, 0, 1) != derive_seed(1, 1, 0));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
}

TEST_CASE("heatmap counts every trajectory sample") {
  const std::vector<RunConfig> cfgs{open_field(), sealed_box()};
  const BatchReport b = run_batch(cfgs, 7, 2);
  std::int64_t samples = 0;
  for (const auto& per_config : b.runs)
    for (const auto& r : per_config) samples += static_cast<std::int64_t>(r.trajectory.size());
  CHECK(b.heatmap.total() == samples);
  CHECK(b.total_runs() == 4);
  CHECK(b.collisions() == 0);
  CHECK(b.completions() == 2);
  CHECK(b.errors() == 0);
  CHECK(b.summary()["master_seed"] == 7);
}

TEST_CASE("a one-run heatmap marks the cells of its trajectory") {
  const std::vector<RunConfig> cfgs{open_field()};
  const BatchReport b = run_batch(cfgs, 1, 1, 0.1);
  const auto& run = b.runs[0][0];
  Heatmap h = Heatmap::covering(cfgs[0].world.bounds(), 0.1, 0.5);
  for (const auto& s : run.trajectory) h.add(s.position);
  CHECK(h.counts == b.heatmap.counts);
  std::ostringstream os;
  write_heatmap_csv(os, b.heatmap);
  const std::string csv = os.str();
  CHECK(std::count(csv.begin(), csv.end(), '\n') == b.heatmap.counts.rows());
}

TEST_CASE("batch outputs are written") {
  const auto dir = std::filesystem::temp_directory_path() / "acflow_harness_test";
  std::filesystem::remove_all(dir);
  const std::vector<RunConfig> cfgs{open_field()};
  write_batch_outputs(run_batch(cfgs, 1, 1), dir);
  CHECK(std::filesystem::exists(dir / "report.json"));
  CHECK(std::filesystem::exists(dir / "heatmap.csv"));
  CHECK(std::filesystem::exists(dir / "timing.json"));
  CHECK(std::filesystem::exists(dir / "trajectories" / "open_000.csv"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("calibration: defaults pass, a threshold under the noise fails") {
  RunConfig c = load_config(scene::config_path(3));
  CHECK(calibrate(c, 10).ok());
  c.sonar.noise_amplitude = 0;
  CHECK(calibrate(c, 10).ok());
  c = load_config(scene::config_path(3));
  c.controller.T_CA = 0.001;
  const auto rep = calibrate(c, 10);
  CHECK(!rep.ok());
  CHECK(!rep.layers.at(0).pass);
  CHECK(rep.layers.at(0).layer == "CA");
}
