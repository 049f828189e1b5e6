#include <doctest.h>

#include <cmath>
#include <deque>

#include "glassnav/error.hpp"
#include "glassnav/planner.hpp"

using namespace glassnav;

namespace {

// Oracle: trapezoidal minimum time for a rest-to-rest straight move.
double trapezoid_time(double len, double v, double a) {
  if (len >= v * v / a) return len / v + v / a;
  return 2.0 * std::sqrt(len / a);
}

// Oracle: plain BFS over the voxel graph on non-inflated voxels.
bool bfs_reachable(const OccupancyGrid& g, const Vec3& s, const Vec3& t) {
  const Index3 a = *g.voxel_of(s);
  const Index3 b = *g.voxel_of(t);
  std::vector<char> seen(g.size(), 0);
  std::deque<Index3> q{a};
  seen[g.linear(a)] = 1;
  while (!q.empty()) {
    const Index3 c = q.front();
    q.pop_front();
    if (c == b) return true;
    for (int dz = -1; dz <= 1; ++dz)
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const Index3 n = c + Index3(dx, dy, dz);
          if (!g.in_bounds(n) || seen[g.linear(n)] || g.soft_blocked(n)) continue;
          seen[g.linear(n)] = 1;
          q.push_back(n);
        }
  }
  return false;
}

void check_feasible(const Trajectory& tr, const DynamicsLimits& lim, double dt) {
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    CHECK(tr.samples[i].t > tr.samples[i - 1].t);
    const Vec3 v = (tr.samples[i].position - tr.samples[i - 1].position) / dt;
    CHECK(v.norm() <= lim.v_max + 1e-6);
    if (i >= 2) {
      const Vec3 v0 = (tr.samples[i - 1].position - tr.samples[i - 2].position) / dt;
      CHECK((v - v0).norm() / dt <= lim.a_max + 1e-6);
    }
    CHECK(std::abs(wrap_angle(tr.samples[i].yaw - tr.samples[i - 1].yaw)) / dt <=
          lim.yaw_rate_max + 1e-6);
  }
}

GlassSurface square_surface(double x, double y0, double y1, double z0, double z1, int id) {
  GlassSurface s;
  std::vector<Vec3> v{{x, y0, z0}, {x, y1, z0}, {x, y1, z1}, {x, y0, z1}};
  s.polygon = make_polygon(Plane::from_point_normal({x, 0, 0}, {1, 0, 0}), v);
  s.normal = s.polygon.plane.normal;
  s.centroid = vertex_centroid(s.polygon);
  s.cloud = sample_polygon_grid(s.polygon, 0.1);
  s.id = id;
  return s;
}

}  // namespace

TEST_CASE("plan_standard: empty map straight line") {
  const auto g = OccupancyGrid::covering({-2, -2, 0}, {8, 2, 2}, 0.1);
  DynamicsLimits lim;
  const auto tr = plan_standard(g, {0, 0, 1}, 0.0, {5, 0, 1}, lim);
  REQUIRE(tr);
  CHECK(tr->length() == doctest::Approx(5.0).epsilon(0.05));
  const double best = trapezoid_time(5.0, lim.v_max, lim.a_max);
  CHECK(best == doctest::Approx(6.0));
  CHECK(tr->duration() >= best - 1e-9);
  CHECK(tr->duration() <= 1.1 * best);
  check_feasible(*tr, lim, 0.02);
}

TEST_CASE("plan_standard: occupied endpoints") {
  auto g = OccupancyGrid::covering({-2, -2, 0}, {8, 2, 2}, 0.1);
  g.mark_occupied_at({5, 0, 1});
  bool threw = false;
  try {
    plan_standard(g, {0, 0, 1}, 0.0, {5, 0, 1}, {});
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kGoalOccupied;
  }
  CHECK(threw);
  threw = false;
  try {
    plan_standard(g, {5, 0, 1}, 0.0, {0, 0, 1}, {});
  } catch (const Error& e) {
    threw = e.code() == ErrorCode::kStartOccupied;
  }
  CHECK(threw);
}

TEST_CASE("plan_standard: wall with a single 1 m gap") {
  auto g = OccupancyGrid::covering({0, -3, 0}, {6, 3, 2}, 0.1);
  for (double y = -3.0; y <= 3.0; y += 0.05) {
    for (double z = 0.0; z <= 2.0; z += 0.05) {
      if (y > 1.0 && y < 2.0) continue;
      g.mark_occupied_at({3.0, y, z});
    }
  }
  const Vec3 s{1, -1, 1};
  const Vec3 t{5, -1, 1};
  REQUIRE(bfs_reachable(g, s, t));
  const auto tr = plan_standard(g, s, 0.0, t, {});
  REQUIRE(tr);
  CHECK(tr->length() >= (t - s).norm());
  bool through_gap = false;
  for (std::size_t i = 1; i < tr->samples.size(); ++i) {
    const Vec3& a = tr->samples[i - 1].position;
    const Vec3& b = tr->samples[i].position;
    if ((a.x() - 3.0) * (b.x() - 3.0) <= 0.0) through_gap = a.y() > 1.0 && a.y() < 2.0;
  }
  CHECK(through_gap);
  for (const auto& smp : tr->samples) CHECK_FALSE(g.hard_blocked_at(smp.position));
  check_feasible(*tr, {}, 0.02);

  // Sealing the gap leaves no path; the oracle agrees.
  for (double y = 1.0; y <= 2.0; y += 0.05)
    for (double z = 0.0; z <= 2.0; z += 0.05) g.mark_occupied_at({3.0, y, z});
  CHECK_FALSE(bfs_reachable(g, s, t));
  CHECK_FALSE(plan_standard(g, s, 0.0, t, {}));
}

TEST_CASE("time_parameterize: corners respect limits and slow zone") {
  DynamicsLimits lim;
  PlannerOptions opts;
  opts.slow_zone = 0.5;
  const auto tr = time_parameterize({{0, 0, 1}, {3, 0, 1}, {3, 3, 1}, {5, 4, 1.5}}, 0.0, lim, opts);
  check_feasible(tr, lim, 0.02);
  CHECK((tr.end() - Vec3(5, 4, 1.5)).norm() < 1e-9);
  const auto& smp = tr.samples;
  for (std::size_t i = 1; i < smp.size(); ++i) {
    if ((smp[i].position - tr.end()).norm() < 0.45) {
      CHECK((smp[i].position - smp[i - 1].position).norm() / 0.02 <= 0.2 + 1e-6);
    }
  }
}

TEST_CASE("time_parameterize: turns in place when facing away") {
  const auto tr = time_parameterize({{0, 0, 1}, {-3, 0, 1}}, 0.0, {}, {});
  CHECK(tr.samples[5].position == Vec3(0, 0, 1));
  CHECK(std::abs(wrap_angle(tr.samples.back().yaw - M_PI)) < 0.05);
  check_feasible(tr, {}, 0.02);
}

TEST_CASE("straight_trajectory: speed cap and constant yaw") {
  const auto tr = straight_trajectory({0, 0, 1}, {2, 0, 1}, 0.3, 0.2, {});
  for (std::size_t i = 1; i < tr.samples.size(); ++i) {
    CHECK((tr.samples[i].position - tr.samples[i - 1].position).norm() / 0.02 <= 0.2 + 1e-9);
    CHECK(tr.samples[i].yaw == 0.3);
  }
  CHECK((tr.end() - Vec3(2, 0, 1)).norm() < 1e-12);
  CHECK(tr.duration() == doctest::Approx(2.0 / 0.2 + 0.2).epsilon(0.01));
}

TEST_CASE("safety_check") {
  SurfaceRegistry reg;
  reg.ingest({square_surface(2.0, -0.5, 0.5, 0.5, 1.5, 0)});
  const auto tr = straight_trajectory({0, 0, 1}, {5, 0, 1}, 0.0, 1.0, {});
  const auto hit = safety_check(tr, reg, 0.1, 0.3);
  REQUIRE(hit);
  CHECK(hit->surface_id == 0);
  CHECK(std::abs(hit->position.x() - 1.7) < 0.11);

  const auto clear = straight_trajectory({0, 2, 1}, {5, 2, 1}, 0.0, 1.0, {});
  CHECK_FALSE(safety_check(clear, reg, 0.1, 0.3));

  // Two surfaces on the route: the earlier one in time is reported, whatever
  // its registry order.
  SurfaceRegistry two;
  two.ingest({square_surface(4.0, -0.5, 0.5, 0.5, 1.5, 0), square_surface(2.0, -0.5, 0.5, 0.5, 1.5, 1)});
  const auto first = safety_check(tr, two, 0.1, 0.3);
  REQUIRE(first);
  CHECK(first->surface_id == two.surfaces()[1].id);
  // Oracle: time of the first sample within 0.3 m of x = 2.
  double t_oracle = 0.0;
  for (const auto& s : tr.samples) {
    if (s.position.x() >= 1.7) {
      t_oracle = s.t;
      break;
    }
  }
  CHECK(std::abs(first->t - t_oracle) < 0.15);

  // Confirmed and invalidated surfaces are ignored.
  two.set_status(two.surfaces()[1].id, SurfaceStatus::kConfirmed);
  two.set_status(two.surfaces()[0].id, SurfaceStatus::kInvalidated);
  CHECK_FALSE(safety_check(tr, two, 0.1, 0.3));
}
