#include <doctest.h>

#include <cmath>
#include <map>
#include <sstream>

#include "glassnav/error.hpp"
#include "glassnav/navigator.hpp"

using namespace glassnav;

namespace {

Scenario scenario_file(const std::string& name) {
  return load_scenario(std::string(GLASSNAV_SCENARIO_DIR) + "/" + name + ".json");
}

const GlassPanel& panel_of_kind(const Scenario& s, PanelKind kind) {
  for (const auto& p : s.glass_panels) {
    if (p.kind == kind) return p;
  }
  throw std::runtime_error("no panel of that kind");
}

double logged_length(const std::vector<LogEntry>& log) {
  double acc = 0.0;
  for (std::size_t i = 1; i < log.size(); ++i) acc += (log[i].position - log[i - 1].position).norm();
  return acc;
}

// Each surface id starts at most one touch.
bool single_touch(const std::vector<LogEntry>& log) {
  std::map<int, int> starts;
  for (const auto& e : log) {
    if (e.event == "touch_start" && ++starts[e.surface_id] > 1) return false;
  }
  return true;
}

// Opaque wall across x = 5 with a 1.6 m gap at y in [1.2, 2.8].
Scenario glass_free() {
  Scenario s;
  s.name = "glass_free";
  s.bounds = {{0, -4, 0}, {10, 4, 3}};
  s.obstacles.push_back({{5.0, -4.0, 0}, {5.2, 1.2, 3}});
  s.obstacles.push_back({{5.0, 2.8, 0}, {5.2, 4.0, 3}});
  s.start.position = {1.5, 0, 1.2};
  s.goal = {8.5, 0, 1.2};
  s.finalize();
  return s;
}

}  // namespace

TEST_CASE("method names round-trip") {
  for (const auto m : {Method::kActive, Method::kNoncontact, Method::kContactBased}) {
    CHECK(method_from_string(to_string(m)) == m);
  }
  try {
    method_from_string("teleport");
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("navigate_active: door scenario needs a single touch") {
  const auto s = scenario_file("door");
  const auto r = navigate_active(s, {}, 1);
  CHECK(r.outcome == Outcome::kReached);
  CHECK(r.touch_count == 1);
  CHECK(r.contact_count == 1);
  CHECK(r.confirmed == 1);
  CHECK((r.final_position - s.goal).norm() <= 0.2 + 1e-9);
  CHECK(r.path_length == doctest::Approx(logged_length(r.log)).epsilon(1e-9));
  CHECK(single_touch(r.log));
  CHECK_FALSE(log_crosses(r.log, s.glass_panels.front()));
}

TEST_CASE("navigate_active: sealed room is infeasible after touching both panels") {
  const auto s = scenario_file("sealed_room");
  const auto r = navigate_active(s, {}, 1);
  CHECK(r.outcome == Outcome::kInfeasible);
  CHECK(r.touch_count == 2);
  CHECK(r.confirmed == 2);
  CHECK(single_touch(r.log));
  for (const auto& p : s.glass_panels) CHECK_FALSE(log_crosses(r.log, p));
}

TEST_CASE("navigate: double opening separates the three methods") {
  const auto s = scenario_file("double_opening");
  const auto& phantom = panel_of_kind(s, PanelKind::kPhantom);
  const auto& glass = panel_of_kind(s, PanelKind::kTrue);

  const auto active = navigate_active(s, {}, 1);
  CHECK(active.outcome == Outcome::kReached);
  CHECK(active.touch_count == 2);
  CHECK(active.confirmed == 1);
  CHECK(active.invalidated == 1);
  CHECK(log_crosses(active.log, phantom));
  CHECK_FALSE(log_crosses(active.log, glass));
  CHECK(single_touch(active.log));

  const auto vision = navigate_noncontact(s, {}, 1);
  CHECK(vision.contact_count == 0);
  CHECK_FALSE(log_crosses(vision.log, phantom));
  CHECK(vision.outcome == Outcome::kInfeasible);

  // Contact-only flies straight through the phantom, which it never feels.
  const auto blind = navigate_contact_based(s, {}, 1);
  CHECK(blind.outcome == Outcome::kReached);
  CHECK(blind.contact_count >= 1);
  CHECK(log_crosses(blind.log, phantom));
}

TEST_CASE("navigate: without glass the active and vision-only paths agree") {
  const auto s = glass_free();
  const auto a = navigate_active(s, {}, 3);
  const auto n = navigate_noncontact(s, {}, 3);
  REQUIRE(a.outcome == Outcome::kReached);
  REQUIRE(n.outcome == Outcome::kReached);
  CHECK(a.contact_count == 0);
  CHECK(a.touch_count == 0);
  CHECK(std::abs(a.path_length - n.path_length) <= 0.01 * n.path_length);
}

TEST_CASE("navigate: same seed gives identical results") {
  const auto s = scenario_file("door");
  const auto a = navigate_active(s, {}, 5);
  const auto b = navigate_active(s, {}, 5);
  CHECK(to_json(a).dump() == to_json(b).dump());
  std::ostringstream la;
  std::ostringstream lb;
  write_log_ndjson(a.log, la);
  write_log_ndjson(b.log, lb);
  CHECK(la.str() == lb.str());
}

TEST_CASE("log ndjson round-trips") {
  const auto s = scenario_file("door");
  const auto r = navigate_noncontact(s, {}, 2);
  std::stringstream io;
  write_log_ndjson(r.log, io);
  const auto back = read_log_ndjson(io);
  REQUIRE(back.size() == r.log.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].t == doctest::Approx(r.log[i].t).epsilon(1e-9));
    CHECK((back[i].position - r.log[i].position).norm() < 1e-9);
    CHECK(back[i].event == r.log[i].event);
  }
}

TEST_CASE("write_run_svg: produces an svg document") {
  const auto s = scenario_file("door");
  const auto r = navigate_active(s, {}, 1);
  World world = World::for_scenario(s, {});
  std::ostringstream out;
  write_run_svg(s, r.log, &world.registry, out);
  CHECK(out.str().find("<svg") != std::string::npos);
  CHECK(out.str().find("</svg>") != std::string::npos);
}
