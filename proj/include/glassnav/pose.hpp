#pragma once

#include <cmath>
#include <numbers>

#include "glassnav/geometry.hpp"

namespace glassnav {

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
  a = std::remainder(a, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
  return a;
}

struct Pose {
  Vec3 position{Vec3::Zero()};
  double yaw{0.0};

  Vec3 forward() const { return {std::cos(yaw), std::sin(yaw), 0.0}; }
  Vec3 left() const { return {-std::sin(yaw), std::cos(yaw), 0.0}; }
};

struct DynamicsLimits {
  double v_max{1.0};         // m/s
  double a_max{1.0};         // m/s^2
  double yaw_rate_max{1.05};  // rad/s
  double yaw_acc_max{1.05};   // rad/s^2
};

}  // namespace glassnav
