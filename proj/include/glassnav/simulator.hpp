#pragma once

// Ground-truth world, synthetic sensing and agent kinematics.
//
// Depth rays pass through every glass panel. Segmentation reports True and
// Phantom panels alike. Only True panels produce contact events.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "glassnav/perception.hpp"
#include "glassnav/pose.hpp"

namespace glassnav {

struct Box {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Zero()};

  bool contains(const Vec3& p, double margin = 0.0) const {
    return (p.array() >= min.array() - margin).all() && (p.array() <= max.array() + margin).all();
  }
  double distance_to(const Vec3& p) const {
    return (min - p).cwiseMax(p - max).cwiseMax(0.0).norm();
  }
  /// Entry parameter of the ray origin + t * dir in [t_min, t_max], if any.
  std::optional<double> intersect(const Vec3& origin, const Vec3& dir, double t_min,
                                  double t_max) const;
};

enum class PanelKind { kTrue, kPhantom };

struct GlassPanel {
  int id{0};
  Vec3 center{Vec3::Zero()};
  Vec3 normal{Vec3::UnitX()};
  double width{1.0};
  double height{1.0};
  PanelKind kind{PanelKind::kTrue};
  double seg_confidence{0.9};
  double frame_width{0.0};  // opaque border bars, axis-aligned panels only

  Vec3 width_axis() const;
  Vec3 height_axis() const { return normal.cross(width_axis()); }
  std::vector<Vec3> corners() const;
  /// Parameter s in [0,1] where segment a->b crosses the rectangle.
  std::optional<double> segment_crossing(const Vec3& a, const Vec3& b) const;
  double area() const { return width * height; }
};

struct Scenario {
  std::string name;
  Box bounds;
  std::vector<Box> obstacles;
  std::vector<GlassPanel> glass_panels;
  Pose start;
  Vec3 goal{Vec3::Zero()};
  DynamicsLimits limits;
  std::uint64_t noise_seed{0};
  double depth_noise{0.01};

  /// Obstacles plus generated panel frame bars.
  std::vector<Box> opaque;

  /// Regenerates `opaque`. Called by the loaders.
  void finalize();
  /// Problems found in the scenario; empty if valid.
  std::vector<std::string> lint() const;
  bool blocked(const Vec3& p, double margin) const;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
/// Throws Error{kScenario} on unreadable, malformed or invalid files.
Scenario load_scenario(const std::string& path);

struct ContactSensorGeometry {
  double reach{0.25};
  double half_width{0.10};
};

struct ContactEvent {
  double time{0.0};
  Vec3 position{Vec3::Zero()};
  int panel_id{-1};
  Vec3 panel_normal{Vec3::UnitX()};
  /// Fraction of the body motion at which the tip crossed the panel.
  double fraction{0.0};
};

struct AgentState {
  Pose pose;
  Vec3 velocity{Vec3::Zero()};
  double yaw_rate{0.0};
};

struct Command {
  Vec3 velocity{Vec3::Zero()};
  double yaw{0.0};
  /// Feedforward yaw rate; without it the yaw setpoint is approached with
  /// the bang-bang law.
  std::optional<double> yaw_rate;
};

/// Nearest opaque hit along origin + t * dir, t in (0, t_max].
std::optional<double> raycast_opaque(const std::vector<Box>& boxes, const Vec3& origin,
                                     const Vec3& dir, double t_max);

/// z-depth image; misses and hits beyond max range are 0. Noise is added when
/// `rng` is given.
DepthImage render_depth(const Scenario& scenario, const Pose& pose, const CameraModel& cam,
                        std::mt19937_64* rng = nullptr, double sigma = 0.0);

struct SegmentationOptions {
  int min_pixels{12};
  double max_incidence{1.3963};  // rad, about 80 degrees
  /// Panels whose plane is nearer than this to the camera are not segmented.
  double min_distance{0.8};  // m
};

/// One mask per visible panel, in panel order.
std::vector<SegmentationMask> render_segmentation(const Scenario& scenario, const Pose& pose,
                                                  const CameraModel& cam,
                                                  const SegmentationOptions& opts = {},
                                                  std::vector<int>* panel_ids = nullptr);

AgentState step_agent(const AgentState& state, const Command& cmd, double dt,
                      const DynamicsLimits& limits);

/// Earliest crossing of the sensor tip through a True panel while moving
/// from `prev` to `cur`. The event time is left at 0.
std::optional<ContactEvent> check_contact(const Scenario& scenario, const Pose& prev,
                                          const Pose& cur, const ContactSensorGeometry& sensor,
                                          const std::vector<int>& ignore_panels = {});

/// Body centre crossing a True panel, or ending inside an opaque box.
bool check_crash(const Scenario& scenario, const Vec3& prev, const Vec3& cur);

}  // namespace glassnav
