#include "glassnav/navigator.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "glassnav/error.hpp"

namespace glassnav {

std::string to_string(Method m) {
  switch (m) {
    case Method::kActive:
      return "active";
    case Method::kNoncontact:
      return "noncontact";
    case Method::kContactBased:
      return "contact_based";
  }
  return "?";
}

Method method_from_string(const std::string& name) {
  if (name == "active") return Method::kActive;
  if (name == "noncontact") return Method::kNoncontact;
  if (name == "contact_based") return Method::kContactBased;
  throw Error(ErrorCode::kInvalidArgument, "unknown method '" + name + "'");
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kReached:
      return "reached";
    case Outcome::kInfeasible:
      return "infeasible";
    case Outcome::kCrashed:
      return "crashed";
  }
  return "?";
}

nlohmann::json to_json(const NavResult& r) {
  nlohmann::json j;
  j["outcome"] = to_string(r.outcome);
  j["path_length"] = r.path_length;
  j["duration"] = r.duration;
  j["contact_count"] = r.contact_count;
  j["touch_count"] = r.touch_count;
  j["confirmed"] = r.confirmed;
  j["invalidated"] = r.invalidated;
  j["final_position"] = {r.final_position.x(), r.final_position.y(), r.final_position.z()};
  j["panels_on_plans"] = r.panels_on_plans;
  return j;
}

std::vector<int> panels_crossed(const Scenario& scenario, const Trajectory& traj, PanelKind kind) {
  std::vector<int> ids;
  for (const auto& p : scenario.glass_panels) {
    if (p.kind != kind) continue;
    for (std::size_t i = 1; i < traj.samples.size(); ++i) {
      if (p.segment_crossing(traj.samples[i - 1].position, traj.samples[i].position)) {
        ids.push_back(p.id);
        break;
      }
    }
  }
  return ids;
}

bool log_crosses(const std::vector<LogEntry>& log, const GlassPanel& panel) {
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (panel.segment_crossing(log[i - 1].position, log[i].position)) return true;
  }
  return false;
}

namespace {

class Runner {
 public:
  Runner(Method method, const Scenario& scenario, const NavParams& params, std::uint64_t seed,
         World& world)
      : method_(method), scn_(scenario), p_(params), world_(world),
        ses_(scenario, world, session_options(method, params), seed) {}

  NavResult run() {
    ses_.reset_agent(scn_.start);
    if (method_ == Method::kNoncontact) {
      ses_.on_surfaces = [this](const std::vector<int>& ids) {
        for (int id : ids) {
          const auto* s = world_.registry.find(id);
          if (s != nullptr && s->status == SurfaceStatus::kPotential) fill_points(world_.grid, s->cloud);
        }
      };
    } else if (method_ == Method::kActive) {
      ses_.on_surfaces = [this](const std::vector<int>& ids) {
        inherit_resolved();
        // A confirmed surface that grew is filled again at its contact offset.
        for (int id : ids) {
          const auto* s = world_.registry.find(id);
          const auto c = contact_of_.find(id);
          if (s != nullptr && s->status == SurfaceStatus::kConfirmed && c != contact_of_.end()) {
            fill_glass(world_.grid, *s, c->second);
          }
        }
      };
    }
    ses_.sense(method_ != Method::kContactBased);

    NavResult res;
    res.outcome = Outcome::kInfeasible;
    for (int iter = 0; iter < p_.max_iterations; ++iter) {
      if (ses_.crashed()) {
        res.outcome = Outcome::kCrashed;
        break;
      }
      if (ses_.timed_out()) break;
      if ((ses_.pose().position - scn_.goal).norm() <= p_.goal_tolerance) {
        res.outcome = Outcome::kReached;
        break;
      }
      const bool go_on = method_ == Method::kActive ? active_step() : baseline_step();
      if (!go_on) break;
    }
    if (ses_.crashed()) res.outcome = Outcome::kCrashed;
    if (res.outcome != Outcome::kCrashed) ses_.stop();

    res.path_length = ses_.path_length();
    res.duration = ses_.time();
    res.contact_count = ses_.contact_count();
    res.touch_count = touches_;
    res.confirmed = confirmed_;
    res.invalidated = invalidated_;
    res.final_position = ses_.pose().position;
    res.panels_on_plans.assign(on_plans_.begin(), on_plans_.end());
    res.log = ses_.log();
    return res;
  }

 private:
  static SessionOptions session_options(Method method, const NavParams& params) {
    SessionOptions o = params.session;
    if (method == Method::kContactBased) o.perception_every = 0;
    return o;
  }

  // A potential surface lying mostly inside a coplanar resolved surface is
  // another view of it and takes over its status without a touch.
  void inherit_resolved() {
    auto& reg = world_.registry;
    for (std::size_t i = 0; i < reg.surfaces().size(); ++i) {
      const GlassSurface& cand = reg.surfaces()[i];
      if (cand.status != SurfaceStatus::kPotential) continue;
      for (const auto& r : reg.surfaces()) {
        if (r.status == SurfaceStatus::kPotential) continue;
        if (r.status == SurfaceStatus::kConfirmed && !contact_of_.count(r.id)) continue;
        if (unoriented_angle(r.normal, cand.normal) > reg.params().tau_n) continue;
        if (std::abs(r.polygon.plane.signed_distance(cand.centroid)) > p_.inherit_plane_distance) continue;
        double covered = 0.0;
        try {
          const auto proj = reproject_polygon(cand.polygon, r.polygon.plane, r.polygon.frame);
          covered = poly2d::overlay(r.polygon.vertices, proj.vertices).intersection_area /
                    polygon_area(proj);
        } catch (const Error&) {
          continue;
        }
        const double needed = r.status == SurfaceStatus::kInvalidated ? p_.inherit_invalidated_coverage
                                                                        : p_.inherit_coverage;
        if (covered < needed) continue;
        const int id = cand.id;
        const SurfaceStatus status = r.status;
        const int from = r.id;
        reg.set_status(id, status);
        if (status == SurfaceStatus::kConfirmed) {
          contact_of_[id] = contact_of_[from];
          fill_glass(world_.grid, *reg.find(id), contact_of_[id]);
        }
        ses_.log_event("inherited", id, reg.find(id)->centroid);
        break;
      }
    }
  }

  void note_plan(const Trajectory& t) {
    for (int id : panels_crossed(scn_, t)) on_plans_.insert(id);
  }

  // Deferred surfaces are treated as obstacles while planning.
  const OccupancyGrid& planning_grid() {
    if (deferred_.empty()) return world_.grid;
    scratch_ = world_.grid;
    for (int id : deferred_) {
      if (const auto* s = world_.registry.find(id)) fill_points(*scratch_, s->cloud);
    }
    return *scratch_;
  }

  void defer(int id) {
    if (std::find(deferred_.begin(), deferred_.end(), id) == deferred_.end()) deferred_.push_back(id);
  }

  std::optional<Trajectory> plan_to(const Vec3& goal, const PlannerOptions& opts) {
    try {
      return plan_standard(planning_grid(), ses_.pose().position, ses_.pose().yaw, goal, scn_.limits,
                           opts);
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  Session::Monitor monitor(const Trajectory& traj, bool check_surfaces, int exclude) {
    auto blocked = std::make_shared<std::vector<char>>();
    for (const auto& s : traj.samples) blocked->push_back(world_.grid.soft_blocked_at(s.position));
    auto last = std::make_shared<std::size_t>(world_.grid.occupied_log().size());
    return [this, &traj, check_surfaces, exclude, blocked, last](const TickResult& r,
                                                                  std::size_t k) {
      if (check_surfaces && !r.surfaces.empty()) {
        Trajectory rest;
        rest.samples.assign(traj.samples.begin() + static_cast<std::ptrdiff_t>(k), traj.samples.end());
        std::vector<int> excl = deferred_;
        if (exclude >= 0) excl.push_back(exclude);
        if (safety_check(rest, world_.registry, p_.safety_step, p_.robot_radius, excl)) return true;
      }
      const std::size_t n = world_.grid.occupied_log().size();
      if (n != *last) {
        *last = n;
        for (std::size_t i = k; i < traj.samples.size(); i += 2) {
          if (!(*blocked)[i] && world_.grid.soft_blocked_at(traj.samples[i].position)) return true;
        }
      }
      return false;
    };
  }

  void back_off(const ContactEvent& ev) {
    Vec3 n = ev.panel_normal;
    if (n.dot(ses_.pose().position - ev.position) < 0.0) n = -n;
    n.z() = 0.0;
    if (n.norm() < 1e-9) n = -ses_.pose().forward();
    n.normalize();
    const Vec3 from = ses_.pose().position;
    double d = p_.back_off;
    while (d > 0.05 && (!world_.grid.voxel_of(from + d * n) || world_.grid.hard_blocked_at(from + d * n))) {
      d *= 0.5;
    }
    if (d <= 0.05) return;
    ses_.follow(straight_trajectory(from, from + d * n, ses_.pose().yaw, scn_.limits.v_max,
                                    scn_.limits, p_.session.dt));
  }

  void unexpected_contact(const ContactEvent& ev) {
    bool explained = false;
    if (method_ == Method::kActive) {
      for (const auto& s : world_.registry.surfaces()) {
        if (s.status != SurfaceStatus::kPotential || s.polygon.distance_to(ev.position) > p_.robot_radius) {
          continue;
        }
        const int id = s.id;
        world_.registry.set_status(id, SurfaceStatus::kConfirmed);
        fill_glass(world_.grid, *world_.registry.find(id), ev.position);
        contact_of_[id] = ev.position;
        ++confirmed_;
        ses_.log_event("confirmed", id, ev.position);
        explained = true;
        break;
      }
    }
    if (!explained) fill_disc(world_.grid, ev.position, ev.panel_normal, p_.mark_radius);
    back_off(ev);
  }

  // Returns false when the run should end.
  bool after_follow(const FollowResult& fr) {
    if (fr.crashed || fr.timed_out) return false;
    if (fr.contact) unexpected_contact(*fr.contact);
    return true;
  }

  bool baseline_step() {
    auto plan = plan_to(scn_.goal, p_.planner);
    if (!plan) return false;
    note_plan(*plan);
    return after_follow(ses_.follow(*plan, monitor(*plan, false, -1)));
  }

  std::vector<int> corridor_surfaces() {
    std::vector<int> ids;
    std::vector<int> excl;
    while (auto h = segment_check(ses_.pose().position, scn_.goal, world_.registry, p_.safety_step,
                                  p_.robot_radius, excl)) {
      ids.push_back(h->surface_id);
      excl.push_back(h->surface_id);
    }
    return ids;
  }

  bool active_step() {
    auto plan = plan_to(scn_.goal, p_.planner);
    if (!plan) {
      // Deferred surfaces in the way get another chance before giving up.
      for (int id : corridor_surfaces()) {
        if (attempts_[id] >= kMaxAttempts) continue;
        deferred_.erase(std::remove(deferred_.begin(), deferred_.end(), id), deferred_.end());
        touch(id, 0);
        return true;
      }
      return false;
    }
    if (auto hit = safety_check(*plan, world_.registry, p_.safety_step, p_.robot_radius, deferred_)) {
      touch(hit->surface_id, 0);
      return true;
    }
    note_plan(*plan);
    return after_follow(ses_.follow(*plan, monitor(*plan, true, -1)));
  }

  void touch(int id, int depth) {
    const auto* s = world_.registry.find(id);
    if (s == nullptr || s->status != SurfaceStatus::kPotential) return;
    if (depth > 3 || ++attempts_[id] > kMaxAttempts) {
      defer(id);
      return;
    }
    TouchAction action;
    try {
      action = plan_touch(*s, ses_.pose().position, p_.touch, &world_.grid);
    } catch (const Error&) {
      defer(id);
      return;
    }
    if (!action.clear) {
      defer(id);
      return;
    }
    PlannerOptions po = p_.planner;
    po.slow_zone = p_.slow_zone;
    po.slow_speed = p_.touch.v_touch;
    auto transit = plan_to(action.ready_pose.position, po);
    if (!transit) {
      defer(id);
      return;
    }
    std::vector<int> excl = deferred_;
    excl.push_back(id);
    if (auto h = safety_check(*transit, world_.registry, p_.safety_step, p_.robot_radius, excl)) {
      touch(h->surface_id, depth + 1);
      return;
    }
    note_plan(*transit);
    const auto fr = ses_.follow(*transit, monitor(*transit, true, id));
    if (fr.crashed || fr.timed_out || fr.stopped) return;
    if (fr.contact) {
      unexpected_contact(*fr.contact);
      return;
    }
    const auto turn = turn_in_place(ses_.pose().position, ses_.pose().yaw, action.ready_pose.yaw,
                                    scn_.limits, p_.session.dt);
    if (ses_.follow(turn).contact) return;
    if ((ses_.pose().position - action.ready_pose.position).norm() > 0.1 ||
        std::abs(wrap_angle(ses_.pose().yaw - action.ready_pose.yaw)) > 0.1) {
      return;
    }
    note_plan(approach_trajectory(action, scn_.limits, p_.session.dt));
    const auto out = execute_touch(ses_, action);
    ++touches_;
    if (out.confirmed) {
      ++confirmed_;
      contact_of_[world_.registry.resolve(id)] = out.contact_position;
    } else {
      ++invalidated_;
    }
  }

  static constexpr int kMaxAttempts = 3;

  Method method_;
  const Scenario& scn_;
  const NavParams& p_;
  World& world_;
  Session ses_;
  std::optional<OccupancyGrid> scratch_;
  std::vector<int> deferred_;
  std::map<int, int> attempts_;
  std::map<int, Vec3> contact_of_;
  std::set<int> on_plans_;
  int touches_{0};
  int confirmed_{0};
  int invalidated_{0};
};

}  // namespace

NavResult navigate(Method method, const Scenario& scenario, const NavParams& params,
                   std::uint64_t seed, World* world) {
  std::optional<World> own;
  if (world == nullptr) {
    own = World::for_scenario(scenario, params.perception, params.grid_resolution,
                              params.robot_radius);
    world = &*own;
  }
  Runner runner(method, scenario, params, seed, *world);
  return runner.run();
}

NavResult navigate_active(const Scenario& scenario, const NavParams& params, std::uint64_t seed,
                          World* world) {
  return navigate(Method::kActive, scenario, params, seed, world);
}

NavResult navigate_noncontact(const Scenario& scenario, const NavParams& params,
                              std::uint64_t seed, World* world) {
  return navigate(Method::kNoncontact, scenario, params, seed, world);
}

NavResult navigate_contact_based(const Scenario& scenario, const NavParams& params,
                                 std::uint64_t seed, World* world) {
  return navigate(Method::kContactBased, scenario, params, seed, world);
}

std::vector<LogEntry> read_log_ndjson(std::istream& in) {
  std::vector<LogEntry> log;
  std::string line;
  const auto vec = [](const nlohmann::json& a) {
    return Vec3(a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>());
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    LogEntry e;
    e.t = j.at("t").get<double>();
    e.position = vec(j.at("position"));
    e.yaw = j.at("yaw").get<double>();
    if (j.contains("event")) {
      e.event = j["event"].get<std::string>();
      e.surface_id = j.value("surface_id", -1);
      if (j.contains("event_position")) e.event_position = vec(j["event_position"]);
    }
    log.push_back(e);
  }
  return log;
}

void write_run_svg(const Scenario& scenario, const std::vector<LogEntry>& log,
                   const SurfaceRegistry* registry, std::ostream& out) {
  const Box& b = scenario.bounds;
  const double w = b.max.x() - b.min.x();
  const double h = b.max.y() - b.min.y();
  const double scale = 800.0 / std::max(w, h);
  const auto X = [&](double x) { return (x - b.min.x()) * scale; };
  const auto Y = [&](double y) { return (b.max.y() - y) * scale; };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w * scale << "\" height=\""
      << h * scale << "\">\n";
  out << "<rect x=\"0\" y=\"0\" width=\"" << w * scale << "\" height=\"" << h * scale
      << "\" fill=\"white\" stroke=\"black\"/>\n";
  for (const auto& o : scenario.opaque) {
    out << "<rect x=\"" << X(o.min.x()) << "\" y=\"" << Y(o.max.y()) << "\" width=\""
        << (o.max.x() - o.min.x()) * scale << "\" height=\"" << (o.max.y() - o.min.y()) * scale
        << "\" fill=\"#555\"/>\n";
  }
  for (const auto& p : scenario.glass_panels) {
    const Vec3 a = p.center - 0.5 * p.width * p.width_axis();
    const Vec3 c = p.center + 0.5 * p.width * p.width_axis();
    out << "<line x1=\"" << X(a.x()) << "\" y1=\"" << Y(a.y()) << "\" x2=\"" << X(c.x())
        << "\" y2=\"" << Y(c.y()) << "\" stroke=\""
        << (p.kind == PanelKind::kTrue ? "#1f6fd1" : "#d12f1f") << "\" stroke-width=\"4\"/>\n";
  }
  if (registry != nullptr) {
    for (const auto& s : registry->surfaces()) {
      const char* color = s.status == SurfaceStatus::kConfirmed     ? "#0a0"
                          : s.status == SurfaceStatus::kInvalidated ? "#999"
                                                                    : "#f90";
      out << "<polygon fill=\"none\" stroke=\"" << color << "\" stroke-dasharray=\"4 2\" points=\"";
      for (const auto& v : s.polygon.vertices_3d()) out << X(v.x()) << ',' << Y(v.y()) << ' ';
      out << "\"/>\n";
    }
  }
  if (!log.empty()) {
    out << "<polyline fill=\"none\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < log.size(); ++i) {
      if (!log[i].event.empty()) continue;
      out << X(log[i].position.x()) << ',' << Y(log[i].position.y()) << ' ';
    }
    out << "\"/>\n";
  }
  for (const auto& e : log) {
    if (e.event.empty()) continue;
    const char* color = e.event == "confirmed"     ? "#0a0"
                        : e.event == "invalidated" ? "#999"
                        : e.event == "touch_start" ? "#f90"
                        : e.event == "crash"       ? "#f00"
                                                   : "#a0a";
    out << "<circle cx=\"" << X(e.event_position.x()) << "\" cy=\"" << Y(e.event_position.y())
        << "\" r=\"4\" fill=\"" << color << "\"><title>" << e.event << "</title></circle>\n";
  }
  out << "<circle cx=\"" << X(scenario.start.position.x()) << "\" cy=\""
      << Y(scenario.start.position.y()) << "\" r=\"6\" fill=\"none\" stroke=\"green\"/>\n";
  out << "<circle cx=\"" << X(scenario.goal.x()) << "\" cy=\"" << Y(scenario.goal.y())
      << "\" r=\"6\" fill=\"red\"/>\n";
  out << "</svg>\n";
}

}  // namespace glassnav
