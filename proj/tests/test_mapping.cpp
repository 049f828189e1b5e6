#include <doctest.h>

#include "glassnav/error.hpp"
#include "glassnav/mapping.hpp"
#include "glassnav/planner.hpp"
#include "glassnav/simulator.hpp"

using namespace glassnav;

namespace {

OccupancyGrid small_grid() {
  return OccupancyGrid::covering({0, 0, 0}, {6, 2, 2}, 0.1);
}

std::size_t count_state(const OccupancyGrid& g, CellState s) { return g.count(s); }

}  // namespace

TEST_CASE("integrate_ray: 3 m wall gives 29 free then 1 occupied") {
  auto g = small_grid();
  integrate_ray(g, {0.0, 1.05, 1.05}, {3.0, 1.05, 1.05});
  CHECK(count_state(g, CellState::kFree) == 29);
  CHECK(count_state(g, CellState::kOccupied) == 1);
  CHECK(g.state({29, 10, 10}) == CellState::kOccupied);
  for (int x = 0; x < 29; ++x) CHECK(g.state({x, 10, 10}) == CellState::kFree);
}

TEST_CASE("integrate_ray touches only voxels on the ray") {
  auto g = small_grid();
  const Vec3 o{0.37, 0.41, 0.52};
  const Vec3 h{4.11, 1.63, 1.27};
  integrate_ray(g, o, h);
  // Oracle: a voxel is on the segment iff the segment passes through its box.
  std::size_t touched = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const Index3 i = g.unlinear(k);
    if (g.state(i) == CellState::kUnknown) continue;
    ++touched;
    const Vec3 lo = g.origin() + i.cast<double>() * g.resolution();
    Box b{lo.array() - 1e-9, (lo.array() + g.resolution() + 1e-9).matrix()};
    CHECK(b.intersect(o, h - o, 0.0, 1.0).has_value());
  }
  CHECK(touched > 40);
  CHECK(g.state_at(h) == CellState::kOccupied);
}

TEST_CASE("integrate_depth: invalid pixels change nothing, pose outside throws") {
  auto g = small_grid();
  CameraModel cam;
  FrameInput f;
  f.depth = DepthImage(cam.width, cam.height, 0.0);
  f.pose.position = {0.5, 1.0, 1.0};
  integrate_depth(g, f, cam);
  CHECK(count_state(g, CellState::kUnknown) == g.size());

  f.pose.position = {-1, 0, 0};
  bool threw = false;
  try {
    integrate_depth(g, f, cam);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kPoseOutOfBounds;
  }
  CHECK(threw);
}

TEST_CASE("integrate_depth leaves the glass gap") {
  Scenario s;
  s.bounds = {{0, -2, 0}, {6, 2, 2}};
  s.obstacles.push_back({{5.0, -2, 0}, {5.2, 2, 2}});
  GlassPanel p;
  p.center = {2.55, 0, 1};
  p.normal = {-1, 0, 0};
  p.width = 1.0;
  p.height = 1.0;
  s.glass_panels.push_back(p);
  s.start.position = {0.5, 0, 1};
  s.goal = {4, 0, 1};
  s.finalize();
  auto g = OccupancyGrid::covering(s.bounds.min, s.bounds.max, 0.1);
  CameraModel cam;
  FrameInput f;
  f.pose = s.start;
  f.depth = render_depth(s, f.pose, cam);
  integrate_depth(g, f, cam);
  CHECK(g.state_at({4.95, 0, 1}) == CellState::kOccupied);
  CHECK(g.state_at({2.55, 0, 1}) == CellState::kFree);
}

TEST_CASE("occupied voxels are sticky") {
  auto g = small_grid();
  g.mark_occupied({10, 10, 10});
  g.mark_free({10, 10, 10});
  CHECK(g.state({10, 10, 10}) == CellState::kOccupied);
  integrate_ray(g, {0.05, 1.05, 1.05}, {3.0, 1.05, 1.05});
  CHECK(g.state({10, 10, 10}) == CellState::kOccupied);
}

TEST_CASE("fill_glass") {
  GlassSurface s;
  std::vector<Vec3> verts{{2, 0.5, 0.5}, {2, 1.5, 0.5}, {2, 1.5, 1.5}, {2, 0.5, 1.5}};
  s.polygon = make_polygon(Plane::from_point_normal({2, 1, 1}, {1, 0, 0}), verts);
  s.normal = s.polygon.plane.normal;
  s.centroid = vertex_centroid(s.polygon);
  s.cloud = sample_polygon_grid(s.polygon, 0.1);

  auto g = small_grid();
  bool threw = false;
  try {
    fill_glass(g, s, s.centroid);
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kNotConfirmed;
  }
  CHECK(threw);

  s.status = SurfaceStatus::kConfirmed;
  fill_glass(g, s, {2.0, 1.2, 1.0});
  for (const auto& p : s.cloud) CHECK(g.state_at(p) == CellState::kOccupied);

  auto g2 = small_grid();
  const Vec3 contact = s.centroid - 0.1 * s.normal;
  fill_glass(g2, s, contact);
  CHECK(g2.state_at(contact) == CellState::kOccupied);
  for (const auto& p : s.cloud) CHECK(g2.state_at(p - 0.1 * s.normal) == CellState::kOccupied);
}

TEST_CASE("fill_glass closes the hole and changes the planned path") {
  // Wall at x=3 with a 1.2 m hole; the glass surface covers the hole.
  auto g = OccupancyGrid::covering({0, -3, 0}, {6, 3, 2}, 0.1);
  for (double y = -3.0; y <= 3.0; y += 0.05) {
    for (double z = 0.0; z <= 2.0; z += 0.05) {
      if (std::abs(y) < 0.6) continue;
      g.mark_occupied_at({3.0, y, z});
    }
  }
  // Opening above the wall top is closed too so the hole is the only gap.
  const Vec3 start{1, 0, 1};
  const Vec3 goal{5, 0, 1};
  const auto before = plan_standard(g, start, 0.0, goal, {});
  REQUIRE(before);
  CHECK(before->length() < 4.3);

  GlassSurface s;
  std::vector<Vec3> verts{{3, -0.6, 0.0}, {3, 0.6, 0.0}, {3, 0.6, 2.0}, {3, -0.6, 2.0}};
  s.polygon = make_polygon(Plane::from_point_normal({3, 0, 1}, {1, 0, 0}), verts);
  s.normal = s.polygon.plane.normal;
  s.centroid = vertex_centroid(s.polygon);
  s.cloud = sample_polygon_grid(s.polygon, 0.1);
  s.status = SurfaceStatus::kConfirmed;
  fill_glass(g, s, s.centroid);
  CHECK_FALSE(plan_standard(g, start, 0.0, goal, {}));
}

TEST_CASE("grid export") {
  auto g = small_grid();
  g.mark_occupied({1, 2, 3});
  g.mark_free({2, 2, 3});
  std::ostringstream out;
  export_grid(g, out);
  const auto j = nlohmann::json::parse(out.str());
  CHECK(j["resolution"] == 0.1);
  CHECK(j["dims"][0] == 60);
  CHECK(j["voxels"].size() == 2);
  std::ostringstream svg;
  write_grid_svg(g, 0.0, 2.0, svg);
  CHECK(svg.str().find("<svg") == 0);
}
