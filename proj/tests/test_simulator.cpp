#include <doctest.h>

#include <cmath>
#include <random>

#include "glassnav/error.hpp"
#include "glassnav/simulator.hpp"

using namespace glassnav;

namespace {

Scenario open_world() {
  Scenario s;
  s.bounds = {{-10, -10, 0}, {10, 10, 4}};
  s.start.position = {0, 0, 1};
  s.goal = {5, 0, 1};
  return s;
}

GlassPanel panel_at(double x, PanelKind kind, int id = 0) {
  GlassPanel p;
  p.id = id;
  p.center = {x, 0, 1};
  p.normal = {-1, 0, 0};
  p.width = 1.0;
  p.height = 1.0;
  p.kind = kind;
  p.seg_confidence = 0.9;
  return p;
}

CameraModel camera() {
  CameraModel c;
  c.width = 65;
  c.height = 49;
  c.fx = c.fy = 40;
  c.cx = 32;
  c.cy = 24;
  c.max_range = 8.0;
  return c;
}

}  // namespace

TEST_CASE("render_depth: opaque wall, glass pass-through and open sky") {
  auto s = open_world();
  s.obstacles.push_back({{3, -5, 0}, {3.2, 5, 4}});
  s.finalize();
  const auto cam = camera();
  Pose pose;
  pose.position = {0, 0, 1};
  auto d = render_depth(s, pose, cam);
  CHECK(d.at(32, 24) == doctest::Approx(3.0).epsilon(1e-12));

  std::mt19937_64 rng(4);
  auto noisy = render_depth(s, pose, cam, &rng, 0.01);
  CHECK(std::abs(noisy.at(32, 24) - 3.0) < 0.06);

  // Glass at 2 m in front of a wall at 5 m is invisible.
  auto g = open_world();
  g.obstacles.push_back({{5, -5, 0}, {5.2, 5, 4}});
  g.glass_panels.push_back(panel_at(2.0, PanelKind::kTrue));
  g.finalize();
  CHECK(render_depth(g, pose, cam).at(32, 24) == doctest::Approx(5.0));

  auto sky = open_world();
  sky.finalize();
  CHECK(render_depth(sky, pose, cam).at(32, 24) == 0.0);
}

TEST_CASE("render_depth: fixed seed is bit-identical") {
  auto s = open_world();
  s.obstacles.push_back({{3, -5, 0}, {3.2, 5, 4}});
  s.finalize();
  Pose pose;
  pose.position = {0, 0.3, 1.2};
  pose.yaw = 0.2;
  std::mt19937_64 r1(9);
  std::mt19937_64 r2(9);
  const auto a = render_depth(s, pose, camera(), &r1, 0.01);
  const auto b = render_depth(s, pose, camera(), &r2, 0.01);
  CHECK(a.data == b.data);
}

TEST_CASE("render_segmentation") {
  const auto cam = camera();
  Pose pose;
  pose.position = {0, 0, 1};

  auto s = open_world();
  s.glass_panels.push_back(panel_at(3.0, PanelKind::kTrue));
  s.finalize();
  auto masks = render_segmentation(s, pose, cam);
  REQUIRE(masks.size() == 1);
  CHECK(masks[0].confidence == doctest::Approx(0.9));
  CHECK(masks[0].mask.at(32, 24) == 1);

  auto ph = open_world();
  ph.glass_panels.push_back(panel_at(3.0, PanelKind::kPhantom));
  ph.finalize();
  const auto pm = render_segmentation(ph, pose, cam);
  REQUIRE(pm.size() == 1);
  CHECK(pm[0].mask.data == masks[0].mask.data);

  auto behind = open_world();
  behind.glass_panels.push_back(panel_at(-3.0, PanelKind::kTrue));
  behind.finalize();
  CHECK(render_segmentation(behind, pose, cam).empty());

  // Fully hidden behind an opaque box.
  auto hidden = open_world();
  hidden.glass_panels.push_back(panel_at(3.0, PanelKind::kTrue));
  hidden.obstacles.push_back({{1.5, -2, 0}, {1.7, 2, 3}});
  hidden.finalize();
  CHECK(render_segmentation(hidden, pose, cam).empty());
}

TEST_CASE("step_agent limits") {
  DynamicsLimits lim;
  AgentState st;
  Command cmd;
  cmd.velocity = {5, 0, 0};
  for (int i = 0; i < 200; ++i) st = step_agent(st, cmd, 0.02, lim);
  CHECK(st.velocity.norm() <= 1.0 + 1e-12);

  AgentState rest;
  const auto same = step_agent(rest, Command{}, 0.02, lim);
  CHECK(same.velocity.norm() == 0.0);
  CHECK(same.pose.position == rest.pose.position);

  const auto one = step_agent(rest, cmd, 0.1, lim);
  CHECK(one.velocity.norm() <= 0.1 + 1e-12);

  // Random commands never exceed the limits.
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  AgentState s;
  for (int i = 0; i < 2000; ++i) {
    Command c{{u(rng), u(rng), u(rng)}, u(rng)};
    const auto n = step_agent(s, c, 0.02, lim);
    CHECK(n.velocity.norm() <= lim.v_max + 1e-9);
    CHECK((n.velocity - s.velocity).norm() / 0.02 <= lim.a_max + 1e-9);
    CHECK(std::abs(n.yaw_rate) <= lim.yaw_rate_max + 1e-9);
    CHECK(std::abs(n.yaw_rate - s.yaw_rate) / 0.02 <= lim.yaw_acc_max + 1e-9);
    s = n;
  }
}

TEST_CASE("check_contact") {
  ContactSensorGeometry sensor;
  auto s = open_world();
  s.glass_panels.push_back(panel_at(2.0, PanelKind::kTrue, 3));
  s.finalize();
  Pose a;
  a.position = {1.70, 0, 1};
  Pose b = a;
  b.position = {1.80, 0, 1};
  const auto ev = check_contact(s, a, b, sensor);
  REQUIRE(ev);
  CHECK(ev->panel_id == 3);
  CHECK((ev->position - Vec3(2.0, 0, 1)).norm() < 1e-9);

  auto ph = open_world();
  ph.glass_panels.push_back(panel_at(2.0, PanelKind::kPhantom));
  ph.finalize();
  CHECK_FALSE(check_contact(ph, a, b, sensor));

  // Sweeping sideways, 0.5 m short of the panel.
  Pose c;
  c.position = {1.25, -1, 1};
  Pose d = c;
  d.position = {1.25, 1, 1};
  CHECK_FALSE(check_contact(s, c, d, sensor));
}

TEST_CASE("check_crash") {
  auto s = open_world();
  s.glass_panels.push_back(panel_at(2.0, PanelKind::kTrue));
  s.glass_panels.push_back(panel_at(4.0, PanelKind::kPhantom, 1));
  s.obstacles.push_back({{6, -1, 0}, {7, 1, 2}});
  s.finalize();
  CHECK(check_crash(s, {1.9, 0, 1}, {2.1, 0, 1}));
  CHECK_FALSE(check_crash(s, {3.9, 0, 1}, {4.1, 0, 1}));
  CHECK(check_crash(s, {5.9, 0, 1}, {6.1, 0, 1}));
}

TEST_CASE("scenario json round trip and lint") {
  auto s = open_world();
  s.name = "rt";
  auto p = panel_at(2.0, PanelKind::kPhantom, 4);
  p.frame_width = 0.1;
  s.glass_panels.push_back(p);
  s.obstacles.push_back({{6, -1, 0}, {7, 1, 2}});
  s.finalize();
  CHECK(s.opaque.size() == 5);
  const auto j = scenario_to_json(s);
  const auto back = scenario_from_json(j);
  CHECK(back.name == "rt");
  CHECK(back.glass_panels.size() == 1);
  CHECK(back.glass_panels[0].kind == PanelKind::kPhantom);
  CHECK(back.glass_panels[0].id == 4);
  CHECK(back.opaque.size() == 5);
  CHECK(scenario_to_json(back) == j);

  auto bad = j;
  bad["goal"] = {6.5, 0, 1};  // inside the obstacle
  bool threw = false;
  try {
    scenario_from_json(bad);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kScenario;
  }
  CHECK(threw);

  bool missing = false;
  try {
    load_scenario("/nonexistent/file.json");
  } catch (const Error& e) {
    missing = e.code() == ErrorCode::kScenario;
  }
  CHECK(missing);
}
