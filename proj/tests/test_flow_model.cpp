#include "acflow/flow_model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <random>

using namespace acflow;

namespace {

constexpr double pi = std::numbers::pi;

oracle::Mount mount(const SensorPose<double>& p) { return {p.alpha, p.beta, p.l}; }

}  // namespace

TEST_CASE("sensor at platform center, linear motion") {
  const SensorPose<double> pose{0, 0, 0};
  const PolarCoord<double> p{2.0, 0.3};
  const auto f = velocity_field(pose, EgoMotion<double>{0.5, 0}, p);
  CHECK(f.dr_dt == doctest::Approx(-0.5 * std::cos(0.3)));
  CHECK(f.dtheta_dt == doctest::Approx(0.5 * std::sin(0.3) / 2.0));
}

TEST_CASE("centered sensor: dtheta/dt = V sin(theta)/r + omega") {
  const SensorPose<double> pose{0, 0, 0};
  const auto f = velocity_field(pose, EgoMotion<double>{0.3, 0.7}, PolarCoord<double>{1.5, -0.4});
  CHECK(f.dtheta_dt == doctest::Approx(0.3 * std::sin(-0.4) / 1.5 + 0.7));
  CHECK(f.dr_dt == doctest::Approx(-0.3 * std::cos(-0.4)));
}

TEST_CASE("reflector on the motion axis does not move in azimuth") {
  const SensorPose<double> pose{0, pi / 4, 0};
  const auto f = linear_flow_field(pose, 1.0, PolarCoord<double>{2.0, -pi / 4});
  CHECK(f.dtheta_dt == doctest::Approx(0).epsilon(1e-15));
  CHECK(f.dr_dt == doctest::Approx(-1.0));
}

TEST_CASE("invariant vanishes on the motion axis") {
  const SensorPose<double> pose{pi / 6, 0, 0.1};
  CHECK(flow_invariant(pose, PolarCoord<double>{3.0, -pi / 6}) == doctest::Approx(0).epsilon(1e-15));
}

TEST_CASE("range below the singular limit is rejected") {
  const SensorPose<double> pose{0, 0, 0.1};
  CHECK_THROWS_AS(velocity_field(pose, EgoMotion<double>{1, 0}, PolarCoord<double>{0, 0}),
                  std::domain_error);
  CHECK_THROWS_AS(velocity_field(pose, EgoMotion<double>{1, 0}, PolarCoord<double>{1e-4, 0}),
                  std::domain_error);
}

TEST_CASE("velocity field agrees with finite differences of rigid-body motion") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> ang(-pi, pi), half(-pi / 2, pi / 2), lever(0, 0.3),
      range(0.2, 5), V(-0.5, 0.5), w(-1.5, 1.5);
  for (int n = 0; n < 200; ++n) {
    const SensorPose<double> pose{ang(gen), ang(gen), lever(gen)};
    const EgoMotion<double> m{V(gen), w(gen)};
    const PolarCoord<double> p{range(gen), half(gen)};
    const auto f = velocity_field(pose, m, p);
    const Eigen::Vector2d ref = oracle::fd_flow(mount(pose), m.V, m.omega, p.r, p.theta);
    const double scale = std::max(ref.norm(), 1e-3);
    CHECK((Eigen::Vector2d(f.dr_dt, f.dtheta_dt) - ref).norm() / scale < 1e-5);
  }
}

TEST_CASE("field is linear in the motion and splits into translation and rotation") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1, 1);
  for (int n = 0; n < 100; ++n) {
    const SensorPose<double> pose{u(gen) * pi, u(gen) * pi, 0.2 * std::abs(u(gen))};
    const PolarCoord<double> p{1 + 3 * std::abs(u(gen)), u(gen) * pi / 2};
    const double V = u(gen), w = u(gen);
    const auto full = velocity_field(pose, EgoMotion<double>{V, w}, p);
    const auto lin = linear_flow_field(pose, V, p);
    const auto rot = rotation_flow_field(pose, w, p);
    CHECK(full.dr_dt == doctest::Approx(lin.dr_dt + rot.dr_dt).epsilon(1e-12));
    CHECK(full.dtheta_dt == doctest::Approx(lin.dtheta_dt + rot.dtheta_dt).epsilon(1e-12));
  }
}

TEST_CASE("sensor velocity is the platform velocity at the mount") {
  const SensorPose<double> pose{0.4, -0.3, 0.15};
  const EgoMotion<double> m{0.25, 0.8};
  const auto v = sensor_velocity(pose, m);
  // World-frame velocity of the mount point, rotated into the sensor frame.
  const auto [o0, axis0] = oracle::sensor_in_world(mount(pose), Eigen::Vector3d::Zero());
  const double h = 1e-7;
  const auto [o1, axis1] = oracle::sensor_in_world(mount(pose), oracle::platform_pose(m.V, m.omega, h));
  const Eigen::Vector2d vw = (o1 - o0) / h;
  // Sensor frame: x along the axis, y a quarter turn counter-clockwise from it.
  const double vx = vw.x() * std::cos(axis0) + vw.y() * std::sin(axis0);
  const double vy = -vw.x() * std::sin(axis0) + vw.y() * std::cos(axis0);
  CHECK(v.linear.x() == doctest::Approx(vx).epsilon(1e-5));
  CHECK(v.linear.y() == doctest::Approx(vy).epsilon(1e-5));
  CHECK(v.angular.z() == m.omega);
}

TEST_CASE("platform and sensor coordinates round-trip") {
  const SensorPose<double> pose{0.7, 0.2, 0.12};
  for (double th : {-1.2, -0.3, 0.0, 0.9}) {
    const Eigen::Vector2d q = sensor_to_platform(pose, 2.0, th);
    const auto back = platform_to_sensor(pose, q);
    CHECK(back.r == doctest::Approx(2.0));
    CHECK(back.theta == doctest::Approx(th));
    CHECK((q - oracle::place(mount(pose), 2.0, th)).norm() < 1e-12);
  }
}

TEST_CASE("traced linear flow-line keeps the invariant") {
  const SensorPose<double> pose{0.3, -0.5, 0.1};
  const auto line =
      trace_flow_line(pose, EgoMotion<double>{1.0, 0.0}, PolarCoord<double>{2.0, 0.4}, 5.0);
  REQUIRE(line.samples.size() > 10);
  const double c0 = flow_invariant(pose, line.samples.front());
  for (const auto& s : line.samples) CHECK(std::abs(flow_invariant(pose, s) - c0) < 1e-8);
  // Samples run forward in time and end on the domain boundary.
  for (std::size_t i = 1; i < line.times.size(); ++i) CHECK(line.times[i] > line.times[i - 1]);
  const auto& last = line.samples.back();
  const bool on_edge = std::abs(last.r - 5.0) < 1e-6 || std::abs(std::abs(last.theta) - pi / 2) < 1e-6 ||
                       last.r < 2 * kMinRange;
  CHECK(on_edge);
}

TEST_CASE("pure rotation keeps a centered sensor's range") {
  const SensorPose<double> pose{0, 0, 0};
  const auto line =
      trace_flow_line(pose, EgoMotion<double>{0.0, 0.5}, PolarCoord<double>{1.5, 0.0}, 5.0);
  for (const auto& s : line.samples) CHECK(s.r == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("zero motion gives a single sample") {
  const auto line = trace_flow_line(SensorPose<double>{}, EgoMotion<double>{}, PolarCoord<double>{1, 0}, 5.0);
  CHECK(line.samples.size() == 1);
}

TEST_CASE("trace rejects starts beyond range") {
  CHECK_THROWS_AS(trace_flow_line(SensorPose<double>{}, EgoMotion<double>{1, 0},
                                  PolarCoord<double>{6, 0}, 5.0),
                  std::invalid_argument);
}

TEST_CASE("the model is generic in the scalar type") {
  const SensorPose<long double> pose{0.2L, 0.1L, 0.1L};
  const auto fl = velocity_field(pose, EgoMotion<long double>{0.3L, 0.2L}, PolarCoord<long double>{1.0L, 0.5L});
  const auto fd = velocity_field(SensorPose<double>{0.2, 0.1, 0.1}, EgoMotion<double>{0.3, 0.2},
                                 PolarCoord<double>{1.0, 0.5});
  CHECK(static_cast<double>(fl.dr_dt) == doctest::Approx(fd.dr_dt));
  const auto ff = velocity_field(SensorPose<float>{0.2f, 0.1f, 0.1f}, EgoMotion<float>{0.3f, 0.2f},
                                 PolarCoord<float>{1.0f, 0.5f});
  CHECK(ff.dtheta_dt == doctest::Approx(fd.dtheta_dt).epsilon(1e-5));
}
