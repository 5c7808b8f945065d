#pragma once

// Acoustic flow of stationary reflectors seen by a sonar mounted anywhere on
// a planar platform.
//
// Conventions used throughout the project:
//  * Sensor frame: x along the sensor axis, z up. Reflector azimuth theta is
//    measured clockwise (theta > 0 lies toward the sensor's -y side), which is
//    the horizontal-plane branch phi = +pi/2 of spherical_to_cartesian().
//  * Mounting angles alpha (position around the platform) and beta (local yaw)
//    are measured in the same clockwise sense. delta = alpha + beta.
//  * Platform yaw rate omega is counter-clockwise positive about +z.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace acflow {

/// Ranges below this are treated as the r = 0 singularity.
inline constexpr double kMinRange = 1e-3;

template <typename Scalar>
inline constexpr Scalar kHorizontalPhi = std::numbers::pi_v<Scalar> / Scalar(2);

template <typename Scalar>
struct PolarCoord {
  Scalar r{0};
  Scalar theta{0};
  Scalar phi{kHorizontalPhi<Scalar>};
};

template <typename Scalar>
struct SensorPose {
  Scalar alpha{0};
  Scalar beta{0};
  Scalar l{0};

  Scalar delta() const { return alpha + beta; }

  /// Same physical mount reflected about the platform x-axis.
  SensorPose mirrored() const { return {-alpha, -beta, l}; }
};

template <typename Scalar>
struct EgoMotion {
  Scalar V{0};
  Scalar omega{0};
};

template <typename Scalar>
struct FlowDerivative {
  Scalar dr_dt{0};
  Scalar dtheta_dt{0};
};

template <typename Scalar>
struct SensorVelocity {
  Eigen::Matrix<Scalar, 3, 1> linear;
  Eigen::Matrix<Scalar, 3, 1> angular;
};

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> spherical_to_cartesian(const PolarCoord<Scalar>& p) {
  using std::cos;
  using std::sin;
  return {p.r * cos(p.theta), -p.r * sin(p.theta) * sin(p.phi),
          p.r * sin(p.theta) * cos(p.phi)};
}

/// Linear and angular velocity of the sensor, expressed in the sensor frame.
template <typename Scalar>
SensorVelocity<Scalar> sensor_velocity(const SensorPose<Scalar>& pose,
                                       const EgoMotion<Scalar>& motion) {
  using std::cos;
  using std::sin;
  const Scalar d = pose.delta();
  const Scalar lw = pose.l * motion.omega;
  SensorVelocity<Scalar> out;
  out.linear << motion.V * cos(d) - lw * sin(pose.beta), motion.V * sin(d) + lw * cos(pose.beta),
      Scalar(0);
  out.angular << Scalar(0), Scalar(0), motion.omega;
  return out;
}

namespace detail {

template <typename Scalar>
FlowDerivative<Scalar> field_unchecked(const SensorPose<Scalar>& pose,
                                       const EgoMotion<Scalar>& motion, Scalar r, Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar lw = pose.l * motion.omega;
  const Scalar lever = theta + pose.beta;
  const Scalar heading = theta + pose.delta();
  return {lw * sin(lever) - motion.V * cos(heading),
          (lw * cos(lever) + motion.V * sin(heading)) / r + motion.omega};
}

template <typename Scalar>
void require_range(Scalar r) {
  if (!(r >= Scalar(kMinRange))) {
    throw std::domain_error("acoustic flow is singular at r < 1 mm");
  }
}

}  // namespace detail

/// (dr/dt, dtheta/dt) of a stationary reflector at p under platform ego-motion.
template <typename Scalar>
FlowDerivative<Scalar> velocity_field(const SensorPose<Scalar>& pose,
                                      const EgoMotion<Scalar>& motion,
                                      const PolarCoord<Scalar>& p) {
  detail::require_range(p.r);
  return detail::field_unchecked(pose, motion, p.r, p.theta);
}

template <typename Scalar>
FlowDerivative<Scalar> linear_flow_field(const SensorPose<Scalar>& pose, Scalar V,
                                         const PolarCoord<Scalar>& p) {
  using std::cos;
  using std::sin;
  detail::require_range(p.r);
  const Scalar heading = p.theta + pose.delta();
  return {-V * cos(heading), V * sin(heading) / p.r};
}

template <typename Scalar>
FlowDerivative<Scalar> rotation_flow_field(const SensorPose<Scalar>& pose, Scalar omega,
                                           const PolarCoord<Scalar>& p) {
  using std::cos;
  using std::sin;
  detail::require_range(p.r);
  const Scalar lw = pose.l * omega;
  const Scalar lever = p.theta + pose.beta;
  return {lw * sin(lever), lw * cos(lever) / p.r + omega};
}

/// Quantity conserved along every flow-line of a purely linear motion.
template <typename Scalar>
Scalar flow_invariant(const SensorPose<Scalar>& pose, const PolarCoord<Scalar>& p) {
  using std::abs;
  using std::sin;
  return abs(p.r) * sin(p.theta + pose.delta());
}

/// Sensor mounting point in the platform frame (x forward, y left).
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> sensor_origin(const SensorPose<Scalar>& pose) {
  using std::cos;
  using std::sin;
  return {pose.l * cos(pose.alpha), -pose.l * sin(pose.alpha)};
}

/// Horizontal-plane sensor coordinate mapped into the platform frame.
template <typename Scalar>
Eigen::Matrix<Scalar, 2, 1> sensor_to_platform(const SensorPose<Scalar>& pose, Scalar r,
                                               Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar a = pose.delta() + theta;
  return sensor_origin(pose) + Eigen::Matrix<Scalar, 2, 1>(r * cos(a), -r * sin(a));
}

/// Platform-frame point expressed in sensor polar coordinates.
template <typename Scalar>
PolarCoord<Scalar> platform_to_sensor(const SensorPose<Scalar>& pose,
                                      const Eigen::Matrix<Scalar, 2, 1>& point) {
  using std::atan2;
  using std::cos;
  using std::sin;
  const Eigen::Matrix<Scalar, 2, 1> w = point - sensor_origin(pose);
  const Scalar d = pose.delta();
  const Scalar xs = w.x() * cos(d) - w.y() * sin(d);
  const Scalar ys = w.x() * sin(d) + w.y() * cos(d);
  return {w.norm(), atan2(-ys, xs), kHorizontalPhi<Scalar>};
}

template <typename Scalar>
struct FlowLine {
  std::vector<PolarCoord<Scalar>> samples;
  std::vector<Scalar> times;
  EgoMotion<Scalar> motion;
  SensorPose<Scalar> pose;
  Scalar r_max{0};
};

template <typename Scalar>
struct TraceOptions {
  Scalar step{Scalar(0.005)};
  Scalar fov_half_angle{std::numbers::pi_v<Scalar> / Scalar(2)};
  /// Largest change of theta (or relative change of r) allowed per RK4 substep.
  Scalar max_substep_turn{Scalar(0.01)};
  std::size_t max_samples_per_direction{200000};
};

namespace detail {

template <typename Scalar>
struct State {
  Scalar r;
  Scalar theta;
};

template <typename Scalar>
bool inside(const State<Scalar>& s, Scalar r_max, Scalar fov) {
  using std::abs;
  return s.r >= Scalar(kMinRange) && s.r <= r_max && abs(s.theta) <= fov;
}

// One classical RK4 step. Returns false if a stage left the r > 0 domain.
template <typename Scalar>
bool rk4_step(const SensorPose<Scalar>& pose, const EgoMotion<Scalar>& motion,
              const State<Scalar>& s, Scalar h, State<Scalar>& out) {
  const Scalar rmin(kMinRange);
  auto f = [&](Scalar r, Scalar th) { return field_unchecked(pose, motion, r, th); };
  if (s.r < rmin) return false;
  const auto k1 = f(s.r, s.theta);
  const Scalar r2 = s.r + h / 2 * k1.dr_dt;
  if (r2 < rmin) return false;
  const auto k2 = f(r2, s.theta + h / 2 * k1.dtheta_dt);
  const Scalar r3 = s.r + h / 2 * k2.dr_dt;
  if (r3 < rmin) return false;
  const auto k3 = f(r3, s.theta + h / 2 * k2.dtheta_dt);
  const Scalar r4 = s.r + h * k3.dr_dt;
  if (r4 < rmin) return false;
  const auto k4 = f(r4, s.theta + h * k3.dtheta_dt);
  out.r = s.r + h / 6 * (k1.dr_dt + 2 * k2.dr_dt + 2 * k3.dr_dt + k4.dr_dt);
  out.theta = s.theta + h / 6 * (k1.dtheta_dt + 2 * k2.dtheta_dt + 2 * k3.dtheta_dt + k4.dtheta_dt);
  return true;
}

// Advances by h, split into enough substeps that no substep turns the
// reflector by more than max_turn. Returns false if the r > 0 domain was left.
template <typename Scalar>
bool advance(const SensorPose<Scalar>& pose, const EgoMotion<Scalar>& motion,
             const State<Scalar>& s, Scalar h, Scalar max_turn, State<Scalar>& out) {
  using std::abs;
  using std::ceil;
  using std::max;
  const auto d = field_unchecked(pose, motion, s.r, s.theta);
  const Scalar rate = max(abs(d.dtheta_dt), abs(d.dr_dt) / s.r);
  const Scalar n_real = ceil(abs(h) * rate / max_turn);
  const int n = n_real < Scalar(1) ? 1 : (n_real > Scalar(4096) ? 4096 : static_cast<int>(n_real));
  const Scalar sub = h / Scalar(n);
  State<Scalar> cur = s;
  for (int i = 0; i < n; ++i) {
    State<Scalar> next;
    if (!rk4_step(pose, motion, cur, sub, next)) return false;
    cur = next;
  }
  out = cur;
  return true;
}

// Integrates in one time direction, appending samples (excluding the start).
// The final sample is placed on the domain boundary by bisection.
template <typename Scalar>
void trace_direction(const SensorPose<Scalar>& pose, const EgoMotion<Scalar>& motion,
                     const State<Scalar>& start, Scalar r_max, Scalar h,
                     const TraceOptions<Scalar>& opt, std::vector<State<Scalar>>& states,
                     std::vector<Scalar>& times) {
  State<Scalar> cur = start;
  Scalar t(0);
  for (std::size_t i = 0; i < opt.max_samples_per_direction; ++i) {
    State<Scalar> next;
    const bool ok = advance(pose, motion, cur, h, opt.max_substep_turn, next);
    if (ok && inside(next, r_max, opt.fov_half_angle)) {
      cur = next;
      t += h;
      states.push_back(cur);
      times.push_back(t);
      continue;
    }
    // Locate the exit point: largest fraction of h that stays inside.
    Scalar lo(0), hi(1);
    State<Scalar> best = cur;
    for (int it = 0; it < 48; ++it) {
      const Scalar mid = (lo + hi) / 2;
      State<Scalar> probe;
      if (advance(pose, motion, cur, h * mid, opt.max_substep_turn, probe) &&
          inside(probe, r_max, opt.fov_half_angle)) {
        lo = mid;
        best = probe;
      } else {
        hi = mid;
      }
    }
    if (lo > Scalar(0)) {
      states.push_back(best);
      times.push_back(t + h * lo);
    }
    return;
  }
}

}  // namespace detail

/// Trajectory of a stationary reflector through the sensor frame, integrated
/// forward and backward from `start` until it leaves the range or FOV.
template <typename Scalar>
FlowLine<Scalar> trace_flow_line(const SensorPose<Scalar>& pose, const EgoMotion<Scalar>& motion,
                                 const PolarCoord<Scalar>& start, Scalar r_max,
                                 const TraceOptions<Scalar>& opt = {}) {
  using std::abs;
  detail::require_range(start.r);
  if (start.r > r_max) throw std::invalid_argument("flow-line start beyond r_max");
  if (!(opt.step > Scalar(0))) throw std::invalid_argument("flow-line step must be positive");

  FlowLine<Scalar> line;
  line.motion = motion;
  line.pose = pose;
  line.r_max = r_max;
  const detail::State<Scalar> s0{start.r, start.theta};
  if (motion.V == Scalar(0) && motion.omega == Scalar(0)) {
    line.samples.push_back({start.r, start.theta, kHorizontalPhi<Scalar>});
    line.times.push_back(Scalar(0));
    return line;
  }

  std::vector<detail::State<Scalar>> back, fwd;
  std::vector<Scalar> tback, tfwd;
  detail::trace_direction(pose, motion, s0, r_max, -opt.step, opt, back, tback);
  detail::trace_direction(pose, motion, s0, r_max, opt.step, opt, fwd, tfwd);

  line.samples.reserve(back.size() + fwd.size() + 1);
  for (std::size_t i = back.size(); i-- > 0;) {
    line.samples.push_back({back[i].r, back[i].theta, kHorizontalPhi<Scalar>});
    line.times.push_back(tback[i]);
  }
  line.samples.push_back({start.r, start.theta, kHorizontalPhi<Scalar>});
  line.times.push_back(Scalar(0));
  for (std::size_t i = 0; i < fwd.size(); ++i) {
    line.samples.push_back({fwd[i].r, fwd[i].theta, kHorizontalPhi<Scalar>});
    line.times.push_back(tfwd[i]);
  }
  return line;
}

}  // namespace acflow
