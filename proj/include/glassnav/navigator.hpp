#pragma once

// Point-to-point navigation with active touch verification of glass, and
// the vision-only and contact-only baselines.

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "glassnav/planner.hpp"
#include "glassnav/session.hpp"
#include "glassnav/touch.hpp"

namespace glassnav {

enum class Method { kActive, kNoncontact, kContactBased };

std::string to_string(Method m);
/// Throws Error{kInvalidArgument} for unknown names.
Method method_from_string(const std::string& name);

enum class Outcome { kReached, kInfeasible, kCrashed };

std::string to_string(Outcome o);

struct NavParams {
  PerceptionParams perception;
  TouchParams touch;
  SessionOptions session;
  PlannerOptions planner;
  double grid_resolution{0.1};
  double robot_radius{0.3};
  double goal_tolerance{0.2};
  double safety_step{0.1};
  /// Distance before the ready pose over which transit slows to v_touch.
  double slow_zone{0.5};
  /// Contact-based baseline: radius of the disc marked around a contact.
  double mark_radius{0.3};
  double back_off{0.5};
  /// A potential surface within this distance of a resolved surface's plane
  /// and covered by it to this fraction takes over its status.
  double inherit_plane_distance{0.2};
  double inherit_coverage{0.5};
  /// Stricter coverage for taking over an Invalidated status, which would
  /// otherwise clear real glass next to a false positive.
  double inherit_invalidated_coverage{0.9};
  int max_iterations{300};
};

struct NavResult {
  Outcome outcome{Outcome::kInfeasible};
  double path_length{0.0};
  double duration{0.0};
  int contact_count{0};
  int touch_count{0};
  int confirmed{0};
  int invalidated{0};
  Vec3 final_position{Vec3::Zero()};
  /// True panels crossed by any trajectory the navigator planned.
  std::vector<int> panels_on_plans;
  std::vector<LogEntry> log;
};

/// Summary fields only; the log is written separately.
nlohmann::json to_json(const NavResult& r);

/// Runs one navigation from scenario.start to scenario.goal. `world` carries
/// knowledge between calls; a fresh one is used when null.
NavResult navigate(Method method, const Scenario& scenario, const NavParams& params,
                   std::uint64_t seed, World* world = nullptr);

NavResult navigate_active(const Scenario& scenario, const NavParams& params, std::uint64_t seed,
                          World* world = nullptr);
NavResult navigate_noncontact(const Scenario& scenario, const NavParams& params,
                              std::uint64_t seed, World* world = nullptr);
NavResult navigate_contact_based(const Scenario& scenario, const NavParams& params,
                                 std::uint64_t seed, World* world = nullptr);

/// True panel ids whose rectangles a trajectory crosses.
std::vector<int> panels_crossed(const Scenario& scenario, const Trajectory& traj,
                                PanelKind kind = PanelKind::kTrue);

/// Whether consecutive logged positions cross the given panel.
bool log_crosses(const std::vector<LogEntry>& log, const GlassPanel& panel);

std::vector<LogEntry> read_log_ndjson(std::istream& in);

/// Overhead view: obstacles, panels by kind, registry surfaces by status,
/// flown path and touch markers. Any of the optional inputs may be null.
void write_run_svg(const Scenario& scenario, const std::vector<LogEntry>& log,
                   const SurfaceRegistry* registry, std::ostream& out);

}  // namespace glassnav
