#include "glassnav/touch.hpp"

#include <algorithm>
#include <cmath>

#include "glassnav/error.hpp"

namespace glassnav {

namespace {

bool approach_clear(const OccupancyGrid& grid, const Vec3& ready, const Vec3& end) {
  if (!grid.voxel_of(ready) || grid.soft_blocked_at(ready)) return false;
  const double len = (end - ready).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / (0.5 * grid.resolution()))));
  for (int i = 0; i <= n; ++i) {
    const Vec3 p = ready + (end - ready) * (double(i) / n);
    if (!grid.voxel_of(p) || grid.hard_blocked_at(p)) return false;
  }
  return true;
}

TouchAction action_for(const GlassSurface& surface, const Vec3& target, const Vec3& n,
                       const TouchParams& params) {
  TouchAction a;
  a.surface_id = surface.id;
  a.target = target;
  a.normal = n;
  a.ready_pose.position = target + params.delta_s * n;
  a.ready_pose.yaw = std::atan2(-n.y(), -n.x());
  a.end_position = target - params.delta_e * n;
  a.touch_speed = params.v_touch;
  return a;
}

}  // namespace

Vec3 orient_normal_toward(const GlassSurface& surface, const Vec3& agent) {
  const double side = surface.normal.dot(agent - surface.centroid);
  if (std::abs(side) < 1e-9) throw Error(ErrorCode::kOnPlane, "agent lies on the surface plane");
  return side > 0.0 ? surface.normal : Vec3(-surface.normal);
}

TouchAction plan_touch(const GlassSurface& surface, const Vec3& agent, const TouchParams& params,
                       const OccupancyGrid* grid) {
  if (surface.status != SurfaceStatus::kPotential) {
    throw Error(ErrorCode::kNotPotential, "surface " + std::to_string(surface.id) + " is " +
                                              std::string(to_string(surface.status)));
  }
  const Vec3 n = orient_normal_toward(surface, agent);
  if (std::abs(n.z()) >= std::cos(params.vertical_tolerance)) {
    throw Error(ErrorCode::kVerticalNormal, "surface normal is near vertical");
  }
  auto best = action_for(surface, surface.centroid, n, params);
  if (grid == nullptr || approach_clear(*grid, best.ready_pose.position, best.end_position)) {
    return best;
  }
  // Closest cloud point whose approach is clear.
  std::vector<Vec3> candidates = surface.cloud;
  std::stable_sort(candidates.begin(), candidates.end(), [&](const Vec3& a, const Vec3& b) {
    return (a - surface.centroid).squaredNorm() < (b - surface.centroid).squaredNorm();
  });
  for (const auto& c : candidates) {
    auto a = action_for(surface, c, n, params);
    if (approach_clear(*grid, a.ready_pose.position, a.end_position)) return a;
  }
  best.clear = false;
  return best;
}

Trajectory approach_trajectory(const TouchAction& action, const DynamicsLimits& limits,
                               double dt) {
  return straight_trajectory(action.ready_pose.position, action.end_position,
                             action.ready_pose.yaw, action.touch_speed, limits, dt);
}

TouchOutcome execute_touch(Session& session, const TouchAction& action) {
  const Pose& pose = session.pose();
  if ((pose.position - action.ready_pose.position).norm() > 0.1 ||
      std::abs(wrap_angle(pose.yaw - action.ready_pose.yaw)) > 0.1) {
    throw Error(ErrorCode::kNotAtReadyPose, "agent is not at the ready pose");
  }
  const auto& limits = session.scenario().limits;
  const double dt = session.options().dt;
  const double yaw = action.ready_pose.yaw;
  if ((pose.position - action.ready_pose.position).norm() > 1e-9 ||
      std::abs(wrap_angle(pose.yaw - yaw)) > 1e-9) {
    auto settle = straight_trajectory(pose.position, action.ready_pose.position, yaw,
                                      action.touch_speed, limits, dt);
    if (settle.samples.size() > 1) {
      settle.samples.front().yaw = pose.yaw;
      session.follow(settle);
    }
    if (std::abs(wrap_angle(session.pose().yaw - yaw)) > 1e-9) {
      session.follow(turn_in_place(session.pose().position, session.pose().yaw, yaw, limits, dt));
    }
  }

  session.log_event("touch_start", action.surface_id, action.target);
  TouchOutcome outcome;
  const auto r = session.follow(approach_trajectory(action, limits, dt));
  // Fusion may have merged the surface into another one during the approach.
  auto& registry = session.world().registry;
  const int id = registry.resolve(action.surface_id);
  const auto settle_status = [&](SurfaceStatus status) {
    if (registry.find(id)->status == SurfaceStatus::kPotential) registry.set_status(id, status);
  };
  if (r.contact) {
    outcome.confirmed = true;
    outcome.contact_position = r.contact->position;
    settle_status(SurfaceStatus::kConfirmed);
    fill_glass(session.world().grid, *registry.find(id), outcome.contact_position);
    session.log_event("confirmed", id, outcome.contact_position);
  } else {
    settle_status(SurfaceStatus::kInvalidated);
    session.log_event("invalidated", id, session.pose().position);
  }
  if (r.crashed) return outcome;
  session.follow(straight_trajectory(session.pose().position, action.ready_pose.position, yaw,
                                     limits.v_max, limits, dt));
  return outcome;
}

}  // namespace glassnav
