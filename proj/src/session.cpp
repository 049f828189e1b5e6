#include "glassnav/session.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

namespace glassnav {

World World::for_scenario(const Scenario& scenario, const PerceptionParams& params,
                          double resolution, double robot_radius) {
  return World{OccupancyGrid::covering(scenario.bounds.min, scenario.bounds.max, resolution,
                                       robot_radius, 0.5 * robot_radius),
               SurfaceRegistry(params)};
}

void write_log_ndjson(const std::vector<LogEntry>& log, std::ostream& out) {
  for (const auto& e : log) {
    nlohmann::json j;
    j["t"] = e.t;
    j["position"] = {e.position.x(), e.position.y(), e.position.z()};
    j["yaw"] = e.yaw;
    if (!e.event.empty()) {
      j["event"] = e.event;
      if (e.surface_id >= 0) j["surface_id"] = e.surface_id;
      j["event_position"] = {e.event_position.x(), e.event_position.y(), e.event_position.z()};
    }
    out << j.dump() << '\n';
  }
}

Session::Session(const Scenario& scenario, World& world, const SessionOptions& opts,
                 std::uint64_t seed)
    : scenario_(scenario), world_(world), opts_(opts), rng_(seed) {
  state_.pose = scenario.start;
}

void Session::reset_agent(const Pose& pose) {
  state_ = AgentState{};
  state_.pose = pose;
  pressed_.clear();
  record();
}

void Session::record() {
  LogEntry e;
  e.t = time_;
  e.position = state_.pose.position;
  e.yaw = state_.pose.yaw;
  log_.push_back(e);
}

void Session::log_event(const std::string& event, int surface_id, const Vec3& position) {
  LogEntry e;
  e.t = time_;
  e.position = state_.pose.position;
  e.yaw = state_.pose.yaw;
  e.event = event;
  e.surface_id = surface_id;
  e.event_position = position;
  log_.push_back(e);
}

std::vector<int> Session::sense(bool perceive) {
  FrameInput frame;
  frame.pose = state_.pose;
  frame.depth = render_depth(scenario_, state_.pose, opts_.camera, &rng_, scenario_.depth_noise);
  integrate_depth(world_.grid, frame, opts_.camera);
  if (!perceive) return {};
  frame.masks = render_segmentation(scenario_, state_.pose, opts_.camera, opts_.segmentation);
  if (frame.masks.empty()) return {};
  const auto candidates = detect_glass_frame(frame, opts_.camera, world_.registry.params());
  if (candidates.empty()) return {};
  auto changed = world_.registry.ingest(candidates);
  if (on_surfaces && !changed.empty()) on_surfaces(changed);
  return changed;
}

TickResult Session::tick(const Command& cmd) {
  TickResult r;
  const AgentState prev = state_;
  AgentState next = step_agent(state_, cmd, opts_.dt, scenario_.limits);

  if (auto ev = check_contact(scenario_, prev.pose, next.pose, opts_.sensor, pressed_)) {
    ev->time = time_ + ev->fraction * opts_.dt;
    ++contacts_;
    pressed_.push_back(ev->panel_id);
    const double v = next.velocity.norm();
    if (v * v / (2.0 * scenario_.limits.a_max) > opts_.impact_distance) {
      // The panel stops the vehicle where the tip met it.
      next.pose.position = prev.pose.position + ev->fraction * (next.pose.position - prev.pose.position);
      next.velocity.setZero();
      next.yaw_rate = 0.0;
      r.impact = true;
    }
    r.contact = ev;
  }

  path_length_ += (next.pose.position - prev.pose.position).norm();
  if (check_crash(scenario_, prev.pose.position, next.pose.position)) {
    crashed_ = true;
    r.crashed = true;
  }
  state_ = next;
  time_ += opts_.dt;
  ++ticks_;
  record();
  if (r.contact) log_event(r.impact ? "impact" : "contact", r.contact->panel_id, r.contact->position);
  if (r.crashed) log_event("crash", -1, state_.pose.position);

  // A panel stays pressed until every tip point has clearly left it on the
  // body side.
  const Vec3 tip = state_.pose.position + opts_.sensor.reach * state_.pose.forward();
  const Vec3 side = opts_.sensor.half_width * state_.pose.left();
  pressed_.erase(std::remove_if(pressed_.begin(), pressed_.end(),
                                [&](int id) {
                                  for (const auto& p : scenario_.glass_panels) {
                                    if (p.id != id) continue;
                                    const double db = p.normal.dot(state_.pose.position - p.center);
                                    for (const Vec3& q : {tip, Vec3(tip + side), Vec3(tip - side)}) {
                                      const double dq = p.normal.dot(q - p.center);
                                      if (dq * db <= 0.0 || std::abs(dq) <= 0.05) return false;
                                    }
                                    return true;
                                  }
                                  return true;
                                }),
                 pressed_.end());

  const bool map_now = opts_.mapping_every > 0 && ticks_ % opts_.mapping_every == 0;
  const bool perceive_now = opts_.perception_every > 0 && ticks_ % opts_.perception_every == 0;
  if (map_now || perceive_now) r.surfaces = sense(perceive_now);
  return r;
}

FollowResult Session::follow(const Trajectory& traj, const Monitor& monitor) {
  FollowResult out;
  const auto& s = traj.samples;
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    if (timed_out()) {
      out.timed_out = true;
      stop();
      return out;
    }
    Command cmd;
    const Vec3 ff = (s[k + 1].position - s[k].position) / opts_.dt;
    cmd.velocity = ff + opts_.tracking_gain * (s[k].position - state_.pose.position);
    cmd.yaw = s[k + 1].yaw;
    cmd.yaw_rate = wrap_angle(s[k + 1].yaw - s[k].yaw) / opts_.dt;
    const auto r = tick(cmd);
    if (r.crashed) {
      out.crashed = true;
      return out;
    }
    if (r.contact) {
      out.contact = r.contact;
      stop();
      return out;
    }
    if (monitor && monitor(r, k + 1)) {
      out.stopped = true;
      const auto b = brake_along(traj, k + 1);
      out.crashed = b.crashed;
      out.contact = b.contact;
      return out;
    }
  }
  // Settle on the final sample.
  for (int i = 0; i < 100 && (state_.velocity.norm() > 1e-9 ||
                              (state_.pose.position - s.back().position).norm() > 1e-6 ||
                              std::abs(state_.yaw_rate) > 1e-9 ||
                              std::abs(wrap_angle(state_.pose.yaw - s.back().yaw)) > 1e-9);
       ++i) {
    Command cmd;
    cmd.velocity = opts_.tracking_gain * (s.back().position - state_.pose.position);
    cmd.yaw = s.back().yaw;
    const auto r = tick(cmd);
    if (r.crashed || r.contact) {
      out.crashed = r.crashed;
      out.contact = r.contact;
      stop();
      return out;
    }
  }
  out.completed = true;
  return out;
}

FollowResult Session::brake_along(const Trajectory& traj, std::size_t index) {
  FollowResult out;
  const auto& s = traj.samples;
  // Arc length along the remaining samples.
  std::vector<double> arc{0.0};
  for (std::size_t k = index + 1; k < s.size(); ++k) {
    arc.push_back(arc.back() + (s[k].position - s[k - 1].position).norm());
  }
  const auto at = [&](double d) {
    const auto it = std::upper_bound(arc.begin(), arc.end(), d);
    if (it == arc.end()) return s.back();
    const std::size_t j = static_cast<std::size_t>(it - arc.begin());
    const double h = arc[j] - arc[j - 1];
    const double f = h > 0.0 ? (d - arc[j - 1]) / h : 0.0;
    TrajectorySample q = s[index + j - 1];
    q.position += f * (s[index + j].position - q.position);
    return q;
  };
  double v = state_.velocity.norm();
  double d = 0.0;
  const double decel = 0.7 * scenario_.limits.a_max;
  Vec3 ref = index < s.size() ? s[index].position : state_.pose.position;
  double yaw_ref = state_.pose.yaw;
  while (v > 1e-9 && index < s.size()) {
    const double v_next = std::max(0.0, v - decel * opts_.dt);
    d += 0.5 * (v + v_next) * opts_.dt;
    const auto q = at(d);
    Command cmd;
    cmd.velocity = (q.position - ref) / opts_.dt + opts_.tracking_gain * (ref - state_.pose.position);
    cmd.yaw = yaw_ref;
    cmd.yaw_rate = 0.0;
    const auto r = tick(cmd);
    ref = q.position;
    v = v_next;
    if (r.crashed || r.contact) {
      out.crashed = r.crashed;
      out.contact = r.contact;
      break;
    }
  }
  stop();
  return out;
}

void Session::stop() {
  for (int i = 0; i < 200 && (state_.velocity.norm() > 1e-12 || std::abs(state_.yaw_rate) > 1e-12);
       ++i) {
    Command cmd;
    cmd.yaw = state_.pose.yaw;
    cmd.yaw_rate = 0.0;
    const auto r = tick(cmd);
    if (r.crashed) return;
  }
}

}  // namespace glassnav
