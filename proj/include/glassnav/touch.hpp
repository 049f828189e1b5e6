#pragma once

// Touch actions that confirm or invalidate a potential glass surface.

#include "glassnav/mapping.hpp"
#include "glassnav/perception.hpp"
#include "glassnav/session.hpp"

namespace glassnav {

struct TouchParams {
  double delta_s{1.0};  // ready distance in front of the surface, m
  double delta_e{1.0};  // end distance behind the surface, m
  double v_touch{0.2};  // approach speed, m/s
  /// Normals closer than this to vertical have no defined touch yaw.
  double vertical_tolerance{5.0 * M_PI / 180.0};
};

struct TouchAction {
  int surface_id{-1};
  /// Point on the surface the approach passes through.
  Vec3 target{Vec3::Zero()};
  /// Surface normal oriented toward the agent.
  Vec3 normal{Vec3::UnitX()};
  Pose ready_pose;
  Vec3 end_position{Vec3::Zero()};
  double touch_speed{0.2};
  /// False if no candidate target had a clear approach in the grid.
  bool clear{true};
};

struct TouchOutcome {
  bool confirmed{false};
  Vec3 contact_position{Vec3::Zero()};
};

/// Normal of `surface` flipped so that it points at `agent`. Throws
/// Error{kOnPlane} when the agent lies on the surface plane.
Vec3 orient_normal_toward(const GlassSurface& surface, const Vec3& agent);

/// Ready pose and end point for touching `surface`. With a grid, the target
/// moves off the centroid when the centroid approach crosses an occupied
/// voxel. Throws Error{kNotPotential} or Error{kVerticalNormal}.
TouchAction plan_touch(const GlassSurface& surface, const Vec3& agent, const TouchParams& params,
                       const OccupancyGrid* grid = nullptr);

/// Straight approach from the ready position to the end point at constant yaw.
Trajectory approach_trajectory(const TouchAction& action, const DynamicsLimits& limits,
                               double dt);

/// Flies the approach, updates the surface status (and the grid on contact)
/// and retreats to the ready pose. Throws Error{kNotAtReadyPose}.
TouchOutcome execute_touch(Session& session, const TouchAction& action);

}  // namespace glassnav
