#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "glassnav/error.hpp"
#include "glassnav/geometry.hpp"
#include "oracles.hpp"

using namespace glassnav;

namespace {

const Plane kGround{Vec3::UnitZ(), 0.0};

PlanarPolygon ground_polygon(const std::vector<Vec2>& xy) {
  std::vector<Vec3> v;
  for (const auto& p : xy) v.emplace_back(p.x(), p.y(), 0.0);
  return make_polygon(kGround, v);
}

PlanarPolygon rect(double x0, double y0, double x1, double y1) {
  return ground_polygon({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}});
}

std::vector<oracle::P2> world_xy(const PlanarPolygon& p) {
  std::vector<oracle::P2> out;
  for (const auto& v : p.vertices_3d()) out.emplace_back(v.x(), v.y());
  return out;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected glassnav::Error");
  return ErrorCode::kInvalidArgument;
}

}  // namespace

TEST_CASE("ransac: exact coplanar points are all inliers") {
  std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
  const auto fit = fit_plane_ransac(pts, 0.05, 100, 7);
  CHECK(std::abs(std::abs(fit.plane.normal.z()) - 1.0) < 1e-12);
  CHECK(std::abs(fit.plane.offset) < 1e-12);
  CHECK(fit.inliers.size() == 4);
}

TEST_CASE("ransac: noisy plane agrees with full least squares") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> xy(-2.0, 2.0);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<Vec3> pts;
  for (int i = 0; i < 200; ++i) pts.emplace_back(xy(rng), xy(rng), 1.0 + noise(rng));
  const auto fit = fit_plane_ransac(pts, 0.03, 100, 3);
  const auto ref = oracle::lsq_normal_z(pts);
  CHECK(oracle::angle_deg(fit.plane.normal, Vec3::UnitZ()) < 2.0);
  CHECK(oracle::angle_deg(ref, Vec3::UnitZ()) < 2.0);
  CHECK(oracle::angle_deg(fit.plane.normal, ref) < 2.0);
}

TEST_CASE("ransac: collinear points are degenerate") {
  std::vector<Vec3> pts;
  for (int i = 0; i < 10; ++i) pts.emplace_back(0.3 * i, 0.1 * i, 2.0);
  CHECK(code_of([&] { fit_plane_ransac(pts); }) == ErrorCode::kDegenerate);
  CHECK(code_of([&] { fit_plane_ransac(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}}); }) ==
        ErrorCode::kDegenerate);
}

TEST_CASE("ransac: fixed seed is bit-for-bit deterministic") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.02);
  std::vector<Vec3> pts;
  for (int i = 0; i < 80; ++i) pts.emplace_back(n(rng) * 50, n(rng) * 50, 0.5 * i * 0.01 + n(rng));
  const auto a = fit_plane_ransac(pts, 0.05, 100, 99);
  const auto b = fit_plane_ransac(pts, 0.05, 100, 99);
  CHECK(a.plane.normal == b.plane.normal);
  CHECK(a.plane.offset == b.plane.offset);
  CHECK(a.inliers == b.inliers);
}

TEST_CASE("project_to_plane") {
  const auto out = project_to_plane(std::vector<Vec3>{{0, 0, 5}}, kGround);
  CHECK((out[0] - Vec3(0, 0, 0)).norm() < 1e-12);
  const Plane px{Vec3::UnitX(), 1.0};
  const auto same = project_to_plane(std::vector<Vec3>{{1, 2, 3}}, px);
  CHECK((same[0] - Vec3(1, 2, 3)).norm() < 1e-12);

  // Idempotence and zero residual on a tilted plane.
  const Plane tilted = Plane::from_point_normal({0.2, -1, 3}, {0.3, -0.5, 0.8});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-5, 5);
  std::vector<Vec3> pts;
  for (int i = 0; i < 100; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const auto once = project_to_plane(pts, tilted);
  const auto twice = project_to_plane(once, tilted);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(std::abs(tilted.signed_distance(once[i])) < 1e-9);
    CHECK((once[i] - twice[i]).norm() < 1e-12);
  }
}

TEST_CASE("convex hull") {
  std::vector<Vec3> square{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0.5, 0.5, 0}};
  const auto hull = convex_hull_planar(square, kGround);
  CHECK(hull.vertices.size() == 4);
  CHECK(polygon_area(hull) == doctest::Approx(1.0));

  std::vector<Vec3> tri{{0, 0, 0}, {2, 0, 0}, {0, 1, 0}};
  CHECK(convex_hull_planar(tri, kGround).vertices.size() == 3);

  std::vector<Vec3> line{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK(code_of([&] { convex_hull_planar(line, kGround); }) == ErrorCode::kDegenerate);
}

TEST_CASE("convex hull contains random disc samples") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ang(0, 2 * std::numbers::pi);
  std::uniform_real_distribution<double> rr(0, 1);
  std::vector<Vec3> pts;
  for (int i = 0; i < 1000; ++i) {
    const double a = ang(rng);
    const double r = std::sqrt(rr(rng));
    pts.emplace_back(r * std::cos(a), r * std::sin(a), 0.0);
  }
  const auto hull = convex_hull_planar(pts, kGround);
  for (const auto& p : pts) {
    CHECK(hull.contains(hull.frame.to_local(p), 1e-9));
  }
  CHECK(poly2d::signed_area(hull.vertices) > 0.0);
}

TEST_CASE("polygon area") {
  CHECK(polygon_area(rect(0, 0, 1, 1)) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(polygon_area(ground_polygon({{0, 0}, {1, 0}, {0, 1}})) == doctest::Approx(0.5));
  PlanarPolygon two;
  two.vertices = {{0, 0}, {1, 0}};
  CHECK(code_of([&] { polygon_area(two); }) == ErrorCode::kDegenerate);
}

TEST_CASE("polygon iou") {
  const auto a = rect(0, 0, 1, 1);
  CHECK(polygon_iou(a, a) == doctest::Approx(1.0));
  CHECK(polygon_iou(a, rect(3, 3, 4, 4)) == 0.0);
  CHECK(polygon_iou(a, rect(0.5, 0, 1.5, 1)) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // Shared edge only.
  CHECK(polygon_iou(a, rect(1, 0, 2, 1)) == doctest::Approx(0.0));
}

TEST_CASE("polygon union") {
  const auto a = rect(0, 0, 1, 1);
  CHECK(std::abs(polygon_area(polygon_union(a, a)) - 1.0) < 1e-9);
  const auto u = polygon_union(a, rect(0.5, 0, 1.5, 1));
  CHECK(polygon_area(u) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(u.vertices.size() == 4);

  // Shared edge resolves to an inclusive union.
  CHECK(polygon_area(polygon_union(a, rect(1, 0, 2, 1))) == doctest::Approx(2.0));

  CHECK(code_of([&] { polygon_union(a, rect(3, 3, 4, 4)); }) == ErrorCode::kDisjointInputs);

  // L-shaped (non-convex) result is preserved, not re-hulled.
  const auto l = polygon_union(rect(0, 0, 2, 1), rect(0, 0, 1, 2));
  CHECK(polygon_area(l) == doctest::Approx(3.0));
  CHECK(l.vertices.size() == 6);
}

TEST_CASE("polygon union: contained polygon leaves area unchanged") {
  const auto outer = rect(0, 0, 3, 3);
  const auto inner = rect(1, 1, 2, 2);
  CHECK(polygon_area(polygon_union(outer, inner)) == doctest::Approx(9.0));
  CHECK(polygon_area(polygon_union(inner, outer)) == doctest::Approx(9.0));
  CHECK(polygon_iou(outer, inner) == doctest::Approx(1.0 / 9.0));
}

TEST_CASE("polygon booleans match grid oracle on random convex pairs") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> off(-0.8, 0.8);
  int checked = 0;
  for (int c = 0; c < 40; ++c) {
    const auto pa = oracle::random_convex(rng, {0, 0}, 1.0, 12);
    const auto pb = oracle::random_convex(rng, {off(rng), off(rng)}, 0.9, 10);
    if (pa.size() < 3 || pb.size() < 3) continue;
    std::vector<Vec2> va(pa.begin(), pa.end());
    std::vector<Vec2> vb(pb.begin(), pb.end());
    const auto a = ground_polygon(va);
    const auto b = ground_polygon(vb);
    const auto est = oracle::grid_areas(world_xy(a), world_xy(b), 600);
    if (est.intersection_area < 0.05) continue;
    const auto u = polygon_union(a, b);
    CHECK(polygon_area(u) == doctest::Approx(est.union_area).epsilon(0.01));
    CHECK(polygon_iou(a, b) ==
          doctest::Approx(est.intersection_area / est.union_area).epsilon(0.02));
    CHECK(polygon_iou(a, b) == polygon_iou(b, a));
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("sample_polygon_grid") {
  const auto sq = rect(0, 0, 1, 1);
  CHECK(sample_polygon_grid(sq, 0.5).size() == 9);
  const auto tiny = sample_polygon_grid(rect(0, 0, 0.01, 0.01), 1.0);
  CHECK(tiny.size() >= 1);

  const auto tri = ground_polygon({{0, 0}, {2, 0}, {0.3, 1.4}});
  const auto samples = sample_polygon_grid(tri, 0.1);
  for (const auto& s : samples) {
    CHECK(std::abs(s.z()) < 1e-12);
    CHECK(tri.contains(tri.frame.to_local(s), 1e-9));
  }
  // Coverage: every interior point has a sample within one spacing.
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 2);
  int tested = 0;
  while (tested < 200) {
    const Vec3 q{u(rng), u(rng) * 0.7, 0.0};
    if (!tri.contains(tri.frame.to_local(q), 0.0)) continue;
    double best = 1e9;
    for (const auto& s : samples) best = std::min(best, (s - q).norm());
    CHECK(best <= 0.1);
    ++tested;
  }
}

TEST_CASE("vertex centroid") {
  const auto c = vertex_centroid(rect(0, 0, 1, 1));
  CHECK((c - Vec3(0.5, 0.5, 0)).norm() < 1e-12);
  const auto t = vertex_centroid(ground_polygon({{0, 0}, {3, 0}, {0, 3}}));
  CHECK((t - Vec3(1, 1, 0)).norm() < 1e-12);
}

TEST_CASE("unoriented angle") {
  CHECK(unoriented_angle(Vec3::UnitX(), Vec3::UnitY()) == doctest::Approx(std::numbers::pi / 2));
  CHECK(unoriented_angle(Vec3::UnitX(), Vec3::UnitX()) == doctest::Approx(0.0));
  CHECK(unoriented_angle(Vec3::UnitX(), -Vec3::UnitX()) == doctest::Approx(0.0));
  CHECK(code_of([] { unoriented_angle(Vec3(2, 0, 0), Vec3::UnitX()); }) == ErrorCode::kNonUnit);
}
