#pragma once

// Closed-loop simulation of one agent: kinematics, contact and crash checks,
// per-tick depth mapping, periodic glass perception and the event log.

#include <functional>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "glassnav/mapping.hpp"
#include "glassnav/perception.hpp"
#include "glassnav/planner.hpp"
#include "glassnav/simulator.hpp"

namespace glassnav {

/// Knowledge carried by the agent: occupancy grid and glass surfaces.
struct World {
  OccupancyGrid grid;
  SurfaceRegistry registry;

  static World for_scenario(const Scenario& scenario, const PerceptionParams& params,
                            double resolution = 0.1, double robot_radius = 0.3);
};

struct SessionOptions {
  double dt{0.02};
  /// Perception runs every this many ticks; 0 disables it.
  int perception_every{5};
  /// Depth is integrated every this many ticks.
  int mapping_every{1};
  CameraModel camera;
  ContactSensorGeometry sensor;
  SegmentationOptions segmentation;
  double tracking_gain{2.0};
  /// A contact whose stopping distance exceeds this is an impact: the panel
  /// stops the vehicle at the contact point.
  double impact_distance{0.05};
  /// Simulated time after which a run is abandoned.
  double time_limit{900.0};
};

struct LogEntry {
  double t{0.0};
  Vec3 position{Vec3::Zero()};
  double yaw{0.0};
  std::string event;
  int surface_id{-1};
  Vec3 event_position{Vec3::Zero()};
};

void write_log_ndjson(const std::vector<LogEntry>& log, std::ostream& out);

struct TickResult {
  std::optional<ContactEvent> contact;
  bool impact{false};
  bool crashed{false};
  /// Surfaces created or changed by perception this tick.
  std::vector<int> surfaces;
};

struct FollowResult {
  bool completed{false};
  bool stopped{false};
  std::optional<ContactEvent> contact;
  bool crashed{false};
  bool timed_out{false};
};

class Session {
 public:
  Session(const Scenario& scenario, World& world, const SessionOptions& opts,
          std::uint64_t seed);

  const Scenario& scenario() const { return scenario_; }
  World& world() { return world_; }
  const SessionOptions& options() const { return opts_; }
  const AgentState& state() const { return state_; }
  const Pose& pose() const { return state_.pose; }
  double time() const { return time_; }
  double path_length() const { return path_length_; }
  int contact_count() const { return contacts_; }
  bool crashed() const { return crashed_; }
  bool timed_out() const { return time_ >= opts_.time_limit; }
  const std::vector<LogEntry>& log() const { return log_; }

  /// Places the agent at rest, without logging motion.
  void reset_agent(const Pose& pose);

  /// Depth mapping and, if `perceive`, glass detection at the current pose.
  std::vector<int> sense(bool perceive);

  TickResult tick(const Command& cmd);

  /// Called after every tick with the tick result and the index of the next
  /// sample; returning true stops the follower, which then brakes.
  using Monitor = std::function<bool(const TickResult&, std::size_t)>;

  /// Tracks the trajectory sample by sample. A contact ends the follow and
  /// the vehicle comes to rest.
  FollowResult follow(const Trajectory& traj, const Monitor& monitor = {});

  /// Decelerates to rest along the remaining part of `traj` from `index`.
  FollowResult brake_along(const Trajectory& traj, std::size_t index);

  /// Commands zero velocity until at rest.
  void stop();

  void log_event(const std::string& event, int surface_id, const Vec3& position);

  /// Callback receiving surfaces changed by perception.
  std::function<void(const std::vector<int>&)> on_surfaces;

 private:
  void record();

  const Scenario& scenario_;
  World& world_;
  SessionOptions opts_;
  std::mt19937_64 rng_;
  AgentState state_;
  double time_{0.0};
  long ticks_{0};
  double path_length_{0.0};
  int contacts_{0};
  bool crashed_{false};
  std::vector<int> pressed_;
  std::vector<LogEntry> log_;
};

}  // namespace glassnav
