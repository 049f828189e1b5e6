#pragma once

// Grid A* with shortcutting, corner blending and a curvature-limited speed
// profile, plus the trajectory safety check against potential glass.

#include <optional>
#include <vector>

#include "glassnav/mapping.hpp"
#include "glassnav/perception.hpp"
#include "glassnav/pose.hpp"

namespace glassnav {

struct TrajectorySample {
  double t{0.0};
  Vec3 position{Vec3::Zero()};
  double yaw{0.0};
};

struct Trajectory {
  std::vector<TrajectorySample> samples;

  bool empty() const { return samples.empty(); }
  double duration() const { return samples.empty() ? 0.0 : samples.back().t - samples.front().t; }
  double length() const;
  const Vec3& end() const { return samples.back().position; }
};

struct PlannerOptions {
  double dt{0.02};
  /// Distance before the end over which speed is capped at slow_speed.
  double slow_zone{0.0};
  double slow_speed{0.2};
  /// Heading error above which the trajectory starts with a turn in place.
  double hover_turn_threshold{0.35};
  double max_blend{1.0};
  double lateral_acc_fraction{0.6};
  double accel_fraction{0.9};
};

/// Time-parameterized path from start to goal over non-inflated voxels.
/// Returns nullopt if no voxel path exists. Throws Error{kStartOccupied},
/// Error{kGoalOccupied} or Error{kPoseOutOfBounds}.
std::optional<Trajectory> plan_standard(const OccupancyGrid& grid, const Vec3& start,
                                        double start_yaw, const Vec3& goal,
                                        const DynamicsLimits& limits,
                                        const PlannerOptions& opts = {});

/// Voxel-centre path from the A* search, endpoints replaced by start/goal.
std::optional<std::vector<Vec3>> grid_path(const OccupancyGrid& grid, const Vec3& start,
                                           const Vec3& goal);

/// Polyline through the given waypoints, time-parameterized. The optional
/// grid is used to shrink corner blends that would collide.
Trajectory time_parameterize(const std::vector<Vec3>& waypoints, double start_yaw,
                             const DynamicsLimits& limits, const PlannerOptions& opts = {},
                             const OccupancyGrid* grid = nullptr);

/// Straight line at constant yaw with speed capped at `speed`.
Trajectory straight_trajectory(const Vec3& from, const Vec3& to, double yaw, double speed,
                               const DynamicsLimits& limits, double dt = 0.02);

/// Turn in place to `yaw`.
Trajectory turn_in_place(const Vec3& at, double yaw_from, double yaw_to,
                         const DynamicsLimits& limits, double dt = 0.02);

struct SurfaceHit {
  int surface_id{-1};
  double t{0.0};
  Vec3 position{Vec3::Zero()};
};

/// Earliest sample (every `step` meters of arc length) whose robot sphere
/// touches a Potential surface polygon. Surfaces listed in `exclude` are
/// skipped.
std::optional<SurfaceHit> safety_check(const Trajectory& traj, const SurfaceRegistry& registry,
                                       double step = 0.1, double radius = 0.3,
                                       const std::vector<int>& exclude = {});

/// Same test for a single segment.
std::optional<SurfaceHit> segment_check(const Vec3& a, const Vec3& b,
                                        const SurfaceRegistry& registry, double step,
                                        double radius, const std::vector<int>& exclude = {});

}  // namespace glassnav
