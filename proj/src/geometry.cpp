#include "glassnav/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>
#include <tuple>

#include "glassnav/error.hpp"

namespace glassnav {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

void canonicalize_sign(Vec3& n) {
  Eigen::Index k = 0;
  n.cwiseAbs().maxCoeff(&k);
  if (n[k] < 0.0) n = -n;
}

}  // namespace

Plane Plane::from_point_normal(const Vec3& point, const Vec3& normal) {
  const double len = normal.norm();
  if (!(len > 0.0) || !std::isfinite(len)) {
    throw Error(ErrorCode::kInvalidArgument, "plane normal must be non-zero and finite");
  }
  Plane p;
  p.normal = normal / len;
  p.offset = p.normal.dot(point);
  return p;
}

PlaneFrame PlaneFrame::from_plane(const Plane& plane, const Vec3& anchor) {
  const Vec3& n = plane.normal;
  const Vec3 ref = std::abs(n.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
  PlaneFrame f;
  f.u = ref.cross(n).normalized();
  f.v = n.cross(f.u);
  f.origin = plane.project(anchor);
  return f;
}

std::vector<Vec3> PlanarPolygon::vertices_3d() const {
  std::vector<Vec3> out;
  out.reserve(vertices.size());
  for (const auto& q : vertices) out.push_back(frame.to_world(q));
  return out;
}

bool PlanarPolygon::contains(const Vec2& local, double eps) const {
  return poly2d::contains(vertices, local, eps);
}

double PlanarPolygon::distance_to(const Vec3& p) const {
  const double h = plane.signed_distance(p);
  const Vec2 q = frame.to_local(p);
  if (poly2d::contains(vertices, q)) return std::abs(h);
  const double d = poly2d::distance_to_boundary(vertices, q);
  return std::sqrt(h * h + d * d);
}

// ---------------------------------------------------------------------------
// 2D ring utilities

namespace poly2d {

double signed_area(std::span<const Vec2> ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  const Vec2& o = ring[0];
  double acc = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) acc += cross2(ring[i] - o, ring[i + 1] - o);
  return 0.5 * acc;
}

namespace {

double point_segment_distance(const Vec2& q, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = len2 > 0.0 ? (q - a).dot(ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (a + t * ab - q).norm();
}

}  // namespace

double distance_to_boundary(std::span<const Vec2> ring, const Vec2& q) {
  double best = std::numeric_limits<double>::infinity();
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    best = std::min(best, point_segment_distance(q, ring[i], ring[(i + 1) % n]));
  }
  return best;
}

bool contains(std::span<const Vec2> ring, const Vec2& q, double eps) {
  const std::size_t n = ring.size();
  if (n < 3) return false;
  if (distance_to_boundary(ring, q) <= eps) return true;
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = ring[i];
    const Vec2& b = ring[j];
    if ((a.y() > q.y()) != (b.y() > q.y())) {
      const double x = a.x() + (q.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
      if (q.x() < x) inside = !inside;
    }
  }
  return inside;
}

std::vector<Vec2> simplify(std::span<const Vec2> ring, double eps) {
  std::vector<Vec2> out(ring.begin(), ring.end());
  bool changed = true;
  while (changed && out.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < out.size() && out.size() >= 3; ++i) {
      const std::size_t n = out.size();
      const Vec2& a = out[(i + n - 1) % n];
      const Vec2& b = out[i];
      const Vec2& c = out[(i + 1) % n];
      const bool duplicate = (b - a).norm() <= eps;
      const double base = (c - a).norm();
      // b within eps of the line through a and c (covers spikes as well).
      const bool collinear = base > eps ? std::abs(cross2(c - a, b - a)) / base <= eps
                                        : (b - a).norm() <= eps;
      if (duplicate || collinear) {
        out.erase(out.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        --i;
      }
    }
  }
  if (out.size() < 3) out.clear();
  return out;
}

std::vector<Vec2> convex_hull(std::vector<Vec2> pts, double eps) {
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return std::tie(a.x(), a.y()) < std::tie(b.x(), b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [eps](const Vec2& a, const Vec2& b) { return (a - b).norm() <= eps; }),
            pts.end());
  if (pts.size() < 3) return {};
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  auto turn = [eps](const Vec2& o, const Vec2& a, const Vec2& b) {
    const double len = (b - o).norm();
    return cross2(a - o, b - o) > eps * std::max(len, 1.0);
  };
  for (const auto& p : pts) {
    while (k >= 2 && !turn(hull[k - 2], hull[k - 1], p)) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && !turn(hull[k - 2], hull[k - 1], pts[i])) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return {};
  return hull;
}

}  // namespace poly2d

// ---------------------------------------------------------------------------
// Plane fitting

Plane fit_plane_least_squares(std::span<const Vec3> points) {
  if (points.size() < 3) throw Error(ErrorCode::kDegenerate, "least squares needs >= 3 points");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  Vec3 n = es.eigenvectors().col(0).normalized();
  canonicalize_sign(n);
  return Plane{n, n.dot(mean)};
}

namespace {

// Largest distance of any point from the principal line of the set.
double spread_from_principal_line(std::span<const Vec3> points) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Vec3 d = p - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  const Vec3 dir = es.eigenvectors().col(2).normalized();
  double worst = 0.0;
  for (const auto& p : points) {
    const Vec3 d = p - mean;
    worst = std::max(worst, (d - d.dot(dir) * dir).norm());
  }
  return worst;
}

}  // namespace

RansacResult fit_plane_ransac(std::span<const Vec3> points, double inlier_tol, int iterations,
                              std::uint64_t seed) {
  const std::size_t n = points.size();
  if (n < 3) throw Error(ErrorCode::kDegenerate, "RANSAC needs >= 3 points");
  if (!(inlier_tol > 0.0)) throw Error(ErrorCode::kInvalidArgument, "inlier_tol must be > 0");
  if (spread_from_principal_line(points) <= inlier_tol) {
    throw Error(ErrorCode::kDegenerate, "points are collinear within tolerance");
  }

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t best_count = 0;
  Plane best;
  for (int it = 0; it < iterations; ++it) {
    const std::size_t i = pick(rng);
    const std::size_t j = pick(rng);
    const std::size_t k = pick(rng);
    if (i == j || j == k || i == k) continue;
    const Vec3 e1 = points[j] - points[i];
    const Vec3 e2 = points[k] - points[i];
    Vec3 nrm = e1.cross(e2);
    const double area2 = nrm.norm();
    if (area2 <= 1e-12 * std::max(1.0, e1.norm() * e2.norm())) continue;
    nrm /= area2;
    const double off = nrm.dot(points[i]);
    std::size_t count = 0;
    for (const auto& p : points) {
      if (std::abs(nrm.dot(p) - off) <= inlier_tol) ++count;
    }
    if (count > best_count) {
      best_count = count;
      best = Plane{nrm, off};
    }
  }
  if (best_count < 3) throw Error(ErrorCode::kDegenerate, "no valid plane hypothesis");

  RansacResult out;
  std::vector<Vec3> inlier_pts;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(best.signed_distance(points[i])) <= inlier_tol) {
      out.inliers.push_back(i);
      inlier_pts.push_back(points[i]);
    }
  }
  if (spread_from_principal_line(inlier_pts) <= 1e-12) {
    canonicalize_sign(best.normal);
    best.offset = best.normal.dot(inlier_pts.front());
    out.plane = best;
  } else {
    out.plane = fit_plane_least_squares(inlier_pts);
  }
  return out;
}

std::vector<Vec3> project_to_plane(std::span<const Vec3> points, const Plane& plane) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(plane.project(p));
  return out;
}

// ---------------------------------------------------------------------------
// Polygons

PlanarPolygon make_polygon(const Plane& plane, std::span<const Vec3> vertices_3d) {
  if (vertices_3d.size() < 3) throw Error(ErrorCode::kDegenerate, "polygon needs >= 3 vertices");
  Vec3 mean = Vec3::Zero();
  for (const auto& v : vertices_3d) mean += v;
  mean /= static_cast<double>(vertices_3d.size());
  PlanarPolygon poly;
  poly.plane = plane;
  poly.frame = PlaneFrame::from_plane(plane, mean);
  std::vector<Vec2> ring;
  ring.reserve(vertices_3d.size());
  for (const auto& v : vertices_3d) ring.push_back(poly.frame.to_local(v));
  if (poly2d::signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());
  poly.vertices = poly2d::simplify(ring);
  if (poly.vertices.size() < 3) throw Error(ErrorCode::kDegenerate, "polygon collapsed");
  return poly;
}

PlanarPolygon convex_hull_planar(std::span<const Vec3> points, const Plane& plane) {
  if (points.size() < 3) throw Error(ErrorCode::kDegenerate, "hull needs >= 3 points");
  Vec3 mean = Vec3::Zero();
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  PlanarPolygon poly;
  poly.plane = plane;
  poly.frame = PlaneFrame::from_plane(plane, mean);
  std::vector<Vec2> local;
  local.reserve(points.size());
  for (const auto& p : points) local.push_back(poly.frame.to_local(p));
  poly.vertices = poly2d::convex_hull(std::move(local));
  if (poly.vertices.size() < 3) throw Error(ErrorCode::kDegenerate, "points are collinear");
  return poly;
}

double polygon_area(const PlanarPolygon& p) {
  if (p.vertices.size() < 3) throw Error(ErrorCode::kDegenerate, "polygon needs >= 3 vertices");
  return std::abs(poly2d::signed_area(p.vertices));
}

PlanarPolygon reproject_polygon(const PlanarPolygon& p, const Plane& plane,
                                const PlaneFrame& frame) {
  PlanarPolygon out;
  out.plane = plane;
  out.frame = frame;
  std::vector<Vec2> ring;
  ring.reserve(p.vertices.size());
  for (const auto& q : p.vertices) ring.push_back(frame.to_local(plane.project(p.frame.to_world(q))));
  if (poly2d::signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());
  out.vertices = poly2d::simplify(ring);
  if (out.vertices.size() < 3) throw Error(ErrorCode::kDegenerate, "projection collapsed polygon");
  return out;
}

namespace {

// Expresses b in a's frame; both must lie on the same plane.
std::vector<Vec2> into_frame_of(const PlanarPolygon& a, const PlanarPolygon& b) {
  std::vector<Vec2> ring;
  ring.reserve(b.vertices.size());
  for (const auto& q : b.vertices) {
    const Vec3 w = b.frame.to_world(q);
    if (std::abs(a.plane.signed_distance(w)) > 1e-6) {
      throw Error(ErrorCode::kInvalidArgument, "polygons do not share a plane");
    }
    ring.push_back(a.frame.to_local(w));
  }
  if (poly2d::signed_area(ring) < 0.0) std::reverse(ring.begin(), ring.end());
  return ring;
}

bool canonical_less(const PlanarPolygon& a, const PlanarPolygon& b) {
  const double area_a = std::abs(poly2d::signed_area(a.vertices));
  const double area_b = std::abs(poly2d::signed_area(b.vertices));
  if (area_a != area_b) return area_a < area_b;
  const auto va = a.vertices_3d();
  const auto vb = b.vertices_3d();
  if (va.size() != vb.size()) return va.size() < vb.size();
  for (std::size_t i = 0; i < va.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      if (va[i][k] != vb[i][k]) return va[i][k] < vb[i][k];
    }
  }
  return false;
}

}  // namespace

double polygon_iou(const PlanarPolygon& a, const PlanarPolygon& b) {
  if (a.vertices.size() < 3 || b.vertices.size() < 3) {
    throw Error(ErrorCode::kDegenerate, "polygon needs >= 3 vertices");
  }
  // Evaluate in a canonical order so that iou(a, b) == iou(b, a) bit-for-bit.
  const bool swap = canonical_less(b, a);
  const PlanarPolygon& first = swap ? b : a;
  const PlanarPolygon& second = swap ? a : b;
  const auto ring = into_frame_of(first, second);
  const auto ov = poly2d::overlay(first.vertices, ring);
  if (!(ov.union_area > 0.0)) return 0.0;
  return std::clamp(ov.intersection_area / ov.union_area, 0.0, 1.0);
}

PlanarPolygon polygon_union(const PlanarPolygon& a, const PlanarPolygon& b) {
  if (a.vertices.size() < 3 || b.vertices.size() < 3) {
    throw Error(ErrorCode::kDegenerate, "polygon needs >= 3 vertices");
  }
  const auto ring = into_frame_of(a, b);
  const auto ov = poly2d::overlay(a.vertices, ring);
  std::vector<const std::vector<Vec2>*> outer;
  for (const auto& loop : ov.union_loops) {
    if (poly2d::signed_area(loop) > kSnapEps) outer.push_back(&loop);
  }
  if (outer.empty()) throw Error(ErrorCode::kDegenerate, "union produced no boundary");
  if (outer.size() > 1 && ov.intersection_area <= kSnapEps) {
    throw Error(ErrorCode::kDisjointInputs, "polygons do not overlap");
  }
  const auto* best = *std::max_element(outer.begin(), outer.end(), [](auto* x, auto* y) {
    return poly2d::signed_area(*x) < poly2d::signed_area(*y);
  });
  PlanarPolygon out;
  out.plane = a.plane;
  out.frame = a.frame;
  out.vertices = poly2d::simplify(*best);
  if (out.vertices.size() < 3) throw Error(ErrorCode::kDegenerate, "union collapsed");
  return out;
}

std::vector<Vec3> sample_polygon_grid(const PlanarPolygon& p, double spacing) {
  if (!(spacing > 0.0)) throw Error(ErrorCode::kInvalidArgument, "spacing must be > 0");
  if (p.vertices.size() < 3) throw Error(ErrorCode::kDegenerate, "polygon needs >= 3 vertices");
  Vec2 lo = p.vertices.front();
  Vec2 hi = lo;
  for (const auto& q : p.vertices) {
    lo = lo.cwiseMin(q);
    hi = hi.cwiseMax(q);
  }
  std::vector<Vec2> local;
  const double tol = 1e-9;
  const auto nx = static_cast<long>(std::floor((hi.x() - lo.x()) / spacing + 1e-9));
  const auto ny = static_cast<long>(std::floor((hi.y() - lo.y()) / spacing + 1e-9));
  for (long j = 0; j <= ny; ++j) {
    for (long i = 0; i <= nx; ++i) {
      const Vec2 q{lo.x() + static_cast<double>(i) * spacing,
                   lo.y() + static_cast<double>(j) * spacing};
      if (p.contains(q, tol)) local.push_back(q);
    }
  }
  const std::size_t n = p.vertices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = p.vertices[i];
    const Vec2& b = p.vertices[(i + 1) % n];
    const auto steps = std::max<long>(1, static_cast<long>(std::ceil((b - a).norm() / spacing - 1e-9)));
    for (long k = 0; k < steps; ++k) {
      local.push_back(a + (b - a) * (static_cast<double>(k) / static_cast<double>(steps)));
    }
  }
  // Deduplicate on a fine lattice; keep first occurrence order.
  std::set<std::pair<long long, long long>> seen;
  std::vector<Vec3> out;
  out.reserve(local.size());
  for (const auto& q : local) {
    const auto key = std::make_pair(std::llround(q.x() * 1e7), std::llround(q.y() * 1e7));
    if (seen.insert(key).second) out.push_back(p.frame.to_world(q));
  }
  if (out.empty()) out.push_back(vertex_centroid(p));
  return out;
}

Vec3 vertex_centroid(const PlanarPolygon& p) {
  if (p.vertices.empty()) throw Error(ErrorCode::kDegenerate, "empty polygon");
  Vec2 mean = Vec2::Zero();
  for (const auto& q : p.vertices) mean += q;
  mean /= static_cast<double>(p.vertices.size());
  return p.frame.to_world(mean);
}

double unoriented_angle(const Vec3& n1, const Vec3& n2) {
  if (std::abs(n1.norm() - 1.0) > 1e-6 || std::abs(n2.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::kNonUnit, "normals must be unit length");
  }
  const double c = std::clamp(std::abs(n1.dot(n2)), 0.0, 1.0);
  // atan2 form stays accurate for nearly parallel normals.
  const double s = n1.cross(n2).norm();
  const double angle = std::atan2(s, c);
  return std::min(angle, std::numbers::pi / 2.0);
}

}  // namespace glassnav
