#include "glassnav/perception.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>

#include <json.hpp>

#include "glassnav/error.hpp"

namespace glassnav {

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the pair
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::optional<GlassSurface> surface_from_points(const std::vector<Vec3>& pts,
                                                const PerceptionParams& params,
                                                std::uint64_t seed) {
  if (pts.size() < 3) return std::nullopt;
  try {
    const auto fit = fit_plane_ransac(pts, params.ransac_tol, params.ransac_iterations, seed);
    if (fit.inliers.size() < 3 ||
        static_cast<double>(fit.inliers.size()) < params.min_inlier_fraction * static_cast<double>(pts.size())) {
      return std::nullopt;
    }
    std::vector<Vec3> inl;
    inl.reserve(fit.inliers.size());
    for (auto i : fit.inliers) inl.push_back(pts[i]);
    const auto projected = project_to_plane(inl, fit.plane);
    const auto hull = convex_hull_planar(projected, fit.plane);
    return make_surface(hull, params.cloud_spacing);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

void CameraModel::validate() const {
  if (width <= 0 || height <= 0 || !(fx > 0.0) || !(fy > 0.0) || cx < 0.0 || cx >= width ||
      cy < 0.0 || cy >= height || !(max_range > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid camera intrinsics");
  }
}

Eigen::Matrix3d CameraModel::rotation(const Pose& pose) {
  Eigen::Matrix3d body_from_optical;
  body_from_optical << 0, 0, 1,
                       -1, 0, 0,
                       0, -1, 0;
  return Eigen::AngleAxisd(pose.yaw, Vec3::UnitZ()).toRotationMatrix() * body_from_optical;
}

std::string_view to_string(SurfaceStatus s) {
  switch (s) {
    case SurfaceStatus::kPotential: return "potential";
    case SurfaceStatus::kConfirmed: return "confirmed";
    case SurfaceStatus::kInvalidated: return "invalidated";
  }
  return "unknown";
}

void PerceptionParams::validate() const {
  if (!(tau_s > 0.0 && tau_s < 1.0) || !(tau_i > 0.0 && tau_i < 1.0) || !(tau_n > 0.0) ||
      !(tau_c > 0.0) || boundary_dilation <= 0 || !(cloud_spacing > 0.0) || !(ransac_tol > 0.0) ||
      ransac_iterations <= 0 || !(min_inlier_fraction >= 0.0 && min_inlier_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "invalid perception parameters");
  }
}

std::vector<std::pair<int, int>> extract_boundary(const Mask& mask, int dilation) {
  const int w = mask.width;
  const int h = mask.height;
  // Distance-limited dilation: expand a row pass then a column pass.
  std::vector<std::uint8_t> rows(mask.data.size(), 0);
  bool any = false;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (!mask.at(u, v)) continue;
      any = true;
      for (int du = std::max(0, u - dilation); du <= std::min(w - 1, u + dilation); ++du) {
        rows[static_cast<std::size_t>(v * w + du)] = 1;
      }
    }
  }
  if (!any) throw Error(ErrorCode::kEmptyMask, "mask has no pixels");
  std::vector<std::pair<int, int>> out;
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      if (mask.at(u, v)) {
        if (u == 0 || v == 0 || u == w - 1 || v == h - 1) out.emplace_back(u, v);
        continue;
      }
      bool near = false;
      for (int dv = std::max(0, v - dilation); dv <= std::min(h - 1, v + dilation) && !near; ++dv) {
        near = rows[static_cast<std::size_t>(dv * w + u)] != 0;
      }
      if (near) out.emplace_back(u, v);
    }
  }
  return out;
}

Vec3 pixel_to_world(double u, double v, double depth, const CameraModel& cam, const Pose& pose) {
  if (!(depth > 0.0) || !std::isfinite(depth)) {
    throw Error(ErrorCode::kInvalidDepth, "depth must be positive");
  }
  const Vec3 optical = cam.optical_ray(u, v) * depth;
  return pose.position + CameraModel::rotation(pose) * optical;
}

GlassSurface make_surface(const PlanarPolygon& polygon, double cloud_spacing) {
  GlassSurface s;
  s.polygon = polygon;
  s.normal = polygon.plane.normal;
  s.centroid = vertex_centroid(polygon);
  s.cloud = sample_polygon_grid(polygon, cloud_spacing);
  return s;
}

std::vector<GlassSurface> detect_glass_frame(const FrameInput& frame, const CameraModel& cam,
                                             const PerceptionParams& params) {
  std::vector<GlassSurface> out;
  for (std::size_t m = 0; m < frame.masks.size(); ++m) {
    const auto& seg = frame.masks[m];
    if (!(seg.confidence > params.tau_s)) continue;
    if (seg.mask.width != frame.depth.width || seg.mask.height != frame.depth.height) continue;
    std::vector<std::pair<int, int>> boundary;
    try {
      boundary = extract_boundary(seg.mask, params.boundary_dilation);
    } catch (const Error&) {
      continue;
    }
    std::vector<Vec3> pts;
    pts.reserve(boundary.size());
    for (const auto& [u, v] : boundary) {
      const double d = frame.depth.at(u, v);
      if (d > 0.0) pts.push_back(pixel_to_world(u, v, d, cam, frame.pose));
    }
    auto s = surface_from_points(pts, params, mix(params.seed, m));
    if (s) out.push_back(std::move(*s));
  }
  return out;
}

GlassSurface merge_surfaces(const GlassSurface& existing, const GlassSurface& candidate,
                            const PerceptionParams& params) {
  std::vector<Vec3> pts = existing.polygon.vertices_3d();
  const auto cand = candidate.polygon.vertices_3d();
  pts.insert(pts.end(), cand.begin(), cand.end());
  try {
    const auto fit = fit_plane_ransac(pts, params.ransac_tol, params.ransac_iterations,
                                      mix(params.seed, static_cast<std::uint64_t>(existing.id)));
    const auto frame = PlaneFrame::from_plane(fit.plane, existing.centroid);
    const auto a = reproject_polygon(existing.polygon, fit.plane, frame);
    const auto b = reproject_polygon(candidate.polygon, fit.plane, frame);
    auto merged = make_surface(polygon_union(a, b), params.cloud_spacing);
    merged.id = existing.id;
    merged.status = existing.status;
    merged.observation_count = existing.observation_count + candidate.observation_count;
    return merged;
  } catch (const Error&) {
    return existing;
  }
}

bool SurfaceRegistry::gates_pass(const GlassSurface& a, const GlassSurface& b) const {
  if (unoriented_angle(a.normal, b.normal) > params_.tau_n) return false;
  if ((a.centroid - b.centroid).norm() > params_.tau_c) return false;
  try {
    const auto proj = reproject_polygon(b.polygon, a.polygon.plane, a.polygon.frame);
    return polygon_iou(a.polygon, proj) >= params_.tau_i;
  } catch (const Error&) {
    return false;
  }
}

std::optional<std::size_t> SurfaceRegistry::associate(const GlassSurface& candidate) const {
  std::optional<std::size_t> best;
  double best_iou = -1.0;
  int best_id = 0;
  for (std::size_t k = 0; k < surfaces_.size(); ++k) {
    const auto& s = surfaces_[k];
    if (unoriented_angle(s.normal, candidate.normal) > params_.tau_n) continue;
    if ((s.centroid - candidate.centroid).norm() > params_.tau_c) continue;
    double iou = 0.0;
    try {
      const auto proj = reproject_polygon(candidate.polygon, s.polygon.plane, s.polygon.frame);
      iou = polygon_iou(s.polygon, proj);
    } catch (const Error&) {
      continue;
    }
    if (iou < params_.tau_i) continue;
    if (iou > best_iou || (iou == best_iou && s.id < best_id)) {
      best = k;
      best_iou = iou;
      best_id = s.id;
    }
  }
  return best;
}

std::vector<int> SurfaceRegistry::ingest(const std::vector<GlassSurface>& candidates) {
  std::vector<int> touched;
  for (const auto& c : candidates) {
    const auto k = associate(c);
    if (k) {
      surfaces_[*k] = merge_surfaces(surfaces_[*k], c, params_);
      touched.push_back(surfaces_[*k].id);
      consolidate(touched);
    } else {
      GlassSurface s = c;
      s.id = next_id_++;
      s.status = SurfaceStatus::kPotential;
      touched.push_back(s.id);
      surfaces_.push_back(std::move(s));
    }
  }
  std::sort(touched.begin(), touched.end());
  touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
  return touched;
}

void SurfaceRegistry::consolidate(std::vector<int>& touched) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < surfaces_.size() && !changed; ++i) {
      if (surfaces_[i].status != SurfaceStatus::kPotential) continue;
      for (std::size_t j = 0; j < surfaces_.size() && !changed; ++j) {
        if (i == j || surfaces_[j].status != SurfaceStatus::kPotential) continue;
        if (!gates_pass(surfaces_[i], surfaces_[j])) continue;
        const std::size_t keep = surfaces_[i].id < surfaces_[j].id ? i : j;
        const std::size_t drop = keep == i ? j : i;
        const auto merged = merge_surfaces(surfaces_[keep], surfaces_[drop], params_);
        if (merged.observation_count == surfaces_[keep].observation_count) continue;
        surfaces_[keep] = merged;
        touched.push_back(merged.id);
        merged_into_[surfaces_[drop].id] = merged.id;
        surfaces_.erase(surfaces_.begin() + static_cast<std::ptrdiff_t>(drop));
        changed = true;
      }
    }
  }
}

GlassSurface* SurfaceRegistry::find(int id) {
  for (auto& s : surfaces_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

const GlassSurface* SurfaceRegistry::find(int id) const {
  for (const auto& s : surfaces_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

int SurfaceRegistry::resolve(int id) const {
  for (auto it = merged_into_.find(id); it != merged_into_.end(); it = merged_into_.find(id)) {
    id = it->second;
  }
  return id;
}

void SurfaceRegistry::set_status(int id, SurfaceStatus status) {
  auto* s = find(id);
  if (s == nullptr) throw Error(ErrorCode::kInvalidArgument, "unknown surface id");
  if (s->status != SurfaceStatus::kPotential && s->status != status) {
    throw Error(ErrorCode::kInvalidArgument, "surface status is final");
  }
  s->status = status;
}

bool SurfaceRegistry::consistent() const {
  for (std::size_t i = 0; i < surfaces_.size(); ++i) {
    if (surfaces_[i].status != SurfaceStatus::kPotential) continue;
    for (std::size_t j = 0; j < surfaces_.size(); ++j) {
      if (i == j || surfaces_[j].status != SurfaceStatus::kPotential) continue;
      if (gates_pass(surfaces_[i], surfaces_[j])) return false;
    }
  }
  return true;
}

void SurfaceRegistry::dump_ndjson(std::ostream& out) const {
  for (const auto& s : surfaces_) {
    nlohmann::json j;
    j["id"] = s.id;
    j["status"] = to_string(s.status);
    j["centroid"] = {s.centroid.x(), s.centroid.y(), s.centroid.z()};
    j["normal"] = {s.normal.x(), s.normal.y(), s.normal.z()};
    auto verts = nlohmann::json::array();
    for (const auto& v : s.polygon.vertices_3d()) verts.push_back({v.x(), v.y(), v.z()});
    j["polygon_vertices_3d"] = verts;
    j["observation_count"] = s.observation_count;
    out << j.dump() << '\n';
  }
}

}  // namespace glassnav
