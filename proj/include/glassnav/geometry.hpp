#pragma once

// Planar geometry shared by perception, mapping and planning.
//
// Polygons live on a plane and carry a local 2D frame; all polygon
// operations are carried out in that frame. Vertices are kept CCW with
// respect to the frame (u x v = plane normal).

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/Eigenvalues>

namespace glassnav {

using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Snap distance for vertex coincidence in polygon booleans (meters).
inline constexpr double kSnapEps = 1e-9;

/// { x : normal . x = offset }, normal of unit length.
struct Plane {
  Vec3 normal{0.0, 0.0, 1.0};
  double offset{0.0};

  static Plane from_point_normal(const Vec3& point, const Vec3& normal);

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
  Vec3 project(const Vec3& p) const { return p - signed_distance(p) * normal; }
};

/// Orthonormal in-plane axes plus an origin on the plane.
struct PlaneFrame {
  Vec3 origin{Vec3::Zero()};
  Vec3 u{Vec3::UnitX()};
  Vec3 v{Vec3::UnitY()};

  /// Deterministic frame for `plane`: u is horizontal unless the plane is
  /// (near) horizontal, origin is `anchor` projected onto the plane.
  static PlaneFrame from_plane(const Plane& plane, const Vec3& anchor);

  Vec2 to_local(const Vec3& p) const { return {u.dot(p - origin), v.dot(p - origin)}; }
  Vec3 to_world(const Vec2& q) const { return origin + q.x() * u + q.y() * v; }
};

struct PlanarPolygon {
  Plane plane;
  PlaneFrame frame;
  std::vector<Vec2> vertices;  // CCW in `frame`

  std::vector<Vec3> vertices_3d() const;
  bool contains(const Vec2& local, double eps = kSnapEps) const;
  /// Euclidean distance from a 3D point to the filled polygon.
  double distance_to(const Vec3& p) const;
};

struct RansacResult {
  Plane plane;
  std::vector<std::size_t> inliers;
};

/// Plane fit maximizing the inlier count over `iterations` random 3-point
/// hypotheses, then refit by least squares on the winning inlier set.
/// Throws Error{kDegenerate} for fewer than 3 points or a (near) collinear set.
RansacResult fit_plane_ransac(std::span<const Vec3> points, double inlier_tol = 0.05,
                              int iterations = 100, std::uint64_t seed = 0);

/// Least-squares plane through the points (smallest principal axis).
Plane fit_plane_least_squares(std::span<const Vec3> points);

std::vector<Vec3> project_to_plane(std::span<const Vec3> points, const Plane& plane);

PlanarPolygon convex_hull_planar(std::span<const Vec3> points, const Plane& plane);

double polygon_area(const PlanarPolygon& p);
double polygon_iou(const PlanarPolygon& a, const PlanarPolygon& b);
PlanarPolygon polygon_union(const PlanarPolygon& a, const PlanarPolygon& b);

/// Regular in-plane grid (anchored at the local bounding-box corner) plus
/// boundary samples, restricted to the closed polygon.
std::vector<Vec3> sample_polygon_grid(const PlanarPolygon& p, double spacing);

Vec3 vertex_centroid(const PlanarPolygon& p);

/// Angle between two unoriented unit normals, in [0, pi/2].
double unoriented_angle(const Vec3& n1, const Vec3& n2);

/// Orthogonal projection of a polygon's 3D vertices onto `plane`, expressed
/// in `frame`. Orientation is restored to CCW.
PlanarPolygon reproject_polygon(const PlanarPolygon& p, const Plane& plane,
                                const PlaneFrame& frame);

/// Polygon with vertices given in 3D, expected to lie on `plane`.
PlanarPolygon make_polygon(const Plane& plane, std::span<const Vec3> vertices_3d);

namespace poly2d {

double signed_area(std::span<const Vec2> ring);
bool contains(std::span<const Vec2> ring, const Vec2& q, double eps = kSnapEps);
double distance_to_boundary(std::span<const Vec2> ring, const Vec2& q);
std::vector<Vec2> convex_hull(std::vector<Vec2> pts, double eps = kSnapEps);
/// Drops duplicate and collinear vertices.
std::vector<Vec2> simplify(std::span<const Vec2> ring, double eps = kSnapEps);

struct Overlay {
  double intersection_area{0.0};
  double union_area{0.0};
  /// Closed loops of the union boundary; CCW loops are outer boundaries,
  /// CW loops are holes.
  std::vector<std::vector<Vec2>> union_loops;
};

/// Edge-arrangement overlay of two simple CCW rings.
Overlay overlay(std::span<const Vec2> a, std::span<const Vec2> b, double eps = kSnapEps);

}  // namespace poly2d

}  // namespace glassnav
