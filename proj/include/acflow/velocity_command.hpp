#pragma once

#include <algorithm>

namespace acflow {

/// Platform velocity pair. omega > 0 turns left (counter-clockwise).
struct VelocityCommand {
  double V{0};
  double omega{0};

  VelocityCommand clamped(double V_limit, double omega_limit) const {
    return {std::clamp(V, -V_limit, V_limit), std::clamp(omega, -omega_limit, omega_limit)};
  }

  bool operator==(const VelocityCommand&) const = default;
};

}  // namespace acflow
