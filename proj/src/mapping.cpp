#include "glassnav/mapping.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "glassnav/error.hpp"

namespace glassnav {

namespace {

std::vector<Index3> ball_offsets(double radius, double res) {
  std::vector<Index3> out;
  const int r = static_cast<int>(std::ceil(radius / res));
  for (int z = -r; z <= r; ++z) {
    for (int y = -r; y <= r; ++y) {
      for (int x = -r; x <= r; ++x) {
        if (std::sqrt(double(x * x + y * y + z * z)) * res <= radius + 1e-9) out.emplace_back(x, y, z);
      }
    }
  }
  return out;
}

}  // namespace

OccupancyGrid::OccupancyGrid(const Vec3& origin, double resolution, const Index3& dims,
                             double soft_radius, double hard_radius)
    : origin_(origin),
      resolution_(resolution),
      dims_(dims),
      soft_radius_(soft_radius),
      hard_radius_(hard_radius) {
  if (!(resolution > 0.0) || (dims.array() <= 0).any()) {
    throw Error(ErrorCode::kInvalidArgument, "grid needs positive resolution and dims");
  }
  const auto n = static_cast<std::size_t>(dims.x()) * static_cast<std::size_t>(dims.y()) *
                 static_cast<std::size_t>(dims.z());
  cells_.assign(n, 0);
  inflation_.assign(n, 0);
  soft_offsets_ = ball_offsets(soft_radius, resolution);
  hard_offsets_ = ball_offsets(hard_radius, resolution);
  // The grid boundary counts as an obstacle face.
  const Vec3 extent = dims.cast<double>() * resolution;
  for (int z = 0; z < dims.z(); ++z) {
    for (int y = 0; y < dims.y(); ++y) {
      for (int x = 0; x < dims.x(); ++x) {
        const Vec3 c = (Vec3(x, y, z).array() + 0.5).matrix() * resolution;
        const double d = std::min(c.minCoeff(), (extent - c).minCoeff());
        std::uint8_t bits = 0;
        if (d <= soft_radius + 1e-9) bits |= 1u;
        if (d <= hard_radius + 1e-9) bits |= 2u;
        inflation_[linear({x, y, z})] = bits;
      }
    }
  }
}

OccupancyGrid OccupancyGrid::covering(const Vec3& lo, const Vec3& hi, double resolution,
                                      double soft_radius, double hard_radius) {
  const Vec3 extent = hi - lo;
  Index3 dims;
  for (int k = 0; k < 3; ++k) {
    dims[k] = std::max(1, static_cast<int>(std::ceil(extent[k] / resolution - 1e-9)));
  }
  return OccupancyGrid(lo, resolution, dims, soft_radius, hard_radius);
}

std::optional<Index3> OccupancyGrid::voxel_of(const Vec3& p) const {
  const Vec3 q = (p - origin_) / resolution_;
  const Index3 i{static_cast<int>(std::floor(q.x())), static_cast<int>(std::floor(q.y())),
                 static_cast<int>(std::floor(q.z()))};
  if (!in_bounds(i)) return std::nullopt;
  return i;
}

Index3 OccupancyGrid::unlinear(std::size_t k) const {
  const auto nx = static_cast<std::size_t>(dims_.x());
  const auto ny = static_cast<std::size_t>(dims_.y());
  return {static_cast<int>(k % nx), static_cast<int>((k / nx) % ny), static_cast<int>(k / (nx * ny))};
}

CellState OccupancyGrid::state_at(const Vec3& p) const {
  const auto i = voxel_of(p);
  return i ? state(*i) : CellState::kUnknown;
}

void OccupancyGrid::mark_free(const Index3& i) {
  auto& c = cells_[linear(i)];
  if (c != static_cast<std::uint8_t>(CellState::kOccupied)) c = static_cast<std::uint8_t>(CellState::kFree);
}

void OccupancyGrid::mark_occupied(const Index3& i) {
  const std::size_t k = linear(i);
  if (cells_[k] == static_cast<std::uint8_t>(CellState::kOccupied)) return;
  cells_[k] = static_cast<std::uint8_t>(CellState::kOccupied);
  occupied_log_.push_back(k);
  inflate(i);
}

void OccupancyGrid::mark_occupied_at(const Vec3& p) {
  const auto i = voxel_of(p);
  if (i) mark_occupied(*i);
}

void OccupancyGrid::inflate(const Index3& i) {
  for (const auto& o : soft_offsets_) {
    const Index3 j = i + o;
    if (in_bounds(j)) inflation_[linear(j)] |= 1u;
  }
  for (const auto& o : hard_offsets_) {
    const Index3 j = i + o;
    if (in_bounds(j)) inflation_[linear(j)] |= 2u;
  }
}

bool OccupancyGrid::soft_blocked_at(const Vec3& p) const {
  const auto i = voxel_of(p);
  return !i || soft_blocked(*i);
}

bool OccupancyGrid::hard_blocked_at(const Vec3& p) const {
  const auto i = voxel_of(p);
  return !i || hard_blocked(*i);
}

std::size_t OccupancyGrid::count(CellState s) const {
  return static_cast<std::size_t>(
      std::count(cells_.begin(), cells_.end(), static_cast<std::uint8_t>(s)));
}

void integrate_ray(OccupancyGrid& grid, const Vec3& origin, const Vec3& hit) {
  const Vec3 delta = hit - origin;
  const double len = delta.norm();
  auto cur = grid.voxel_of(origin);
  if (!cur) return;
  if (len < 1e-12) {
    grid.mark_occupied(*cur);
    return;
  }
  const Vec3 dir = delta / len;
  const auto hit_voxel = grid.voxel_of(hit - 1e-6 * dir);

  // Amanatides-Woo traversal in units of t along `dir`.
  Index3 i = *cur;
  Index3 step;
  Vec3 t_max;
  Vec3 t_delta;
  const double res = grid.resolution();
  for (int k = 0; k < 3; ++k) {
    if (dir[k] > 0.0) {
      step[k] = 1;
      t_max[k] = (grid.origin()[k] + (i[k] + 1) * res - origin[k]) / dir[k];
      t_delta[k] = res / dir[k];
    } else if (dir[k] < 0.0) {
      step[k] = -1;
      t_max[k] = (grid.origin()[k] + i[k] * res - origin[k]) / dir[k];
      t_delta[k] = -res / dir[k];
    } else {
      step[k] = 0;
      t_max[k] = std::numeric_limits<double>::infinity();
      t_delta[k] = std::numeric_limits<double>::infinity();
    }
  }
  const int max_steps = grid.dims().sum() + 4;
  for (int n = 0; n < max_steps; ++n) {
    if (hit_voxel && i == *hit_voxel) break;
    grid.mark_free(i);
    Eigen::Index k = 0;
    const double t = t_max.minCoeff(&k);
    if (t > len) break;
    i[k] += step[k];
    t_max[k] += t_delta[k];
    if (!grid.in_bounds(i)) return;
  }
  if (hit_voxel) grid.mark_occupied(*hit_voxel);
}

void integrate_depth(OccupancyGrid& grid, const FrameInput& frame, const CameraModel& cam) {
  if (!grid.voxel_of(frame.pose.position)) {
    throw Error(ErrorCode::kPoseOutOfBounds, "camera pose outside the map");
  }
  for (int v = 0; v < frame.depth.height; ++v) {
    for (int u = 0; u < frame.depth.width; ++u) {
      const double d = frame.depth.at(u, v);
      if (!(d > 0.0)) continue;
      integrate_ray(grid, frame.pose.position, pixel_to_world(u, v, d, cam, frame.pose));
    }
  }
}

void fill_points(OccupancyGrid& grid, const std::vector<Vec3>& points) {
  for (const auto& p : points) grid.mark_occupied_at(p);
}

void fill_glass(OccupancyGrid& grid, const GlassSurface& surface, const Vec3& contact_position) {
  if (surface.status != SurfaceStatus::kConfirmed) {
    throw Error(ErrorCode::kNotConfirmed, "only confirmed surfaces are filled");
  }
  if (!contact_position.allFinite()) {
    throw Error(ErrorCode::kInvalidArgument, "contact position must be finite");
  }
  const Vec3& n = surface.normal;
  const double delta = n.dot(contact_position - surface.centroid);
  for (const auto& p : surface.cloud) grid.mark_occupied_at(p + delta * n);
  grid.mark_occupied_at(contact_position);
}

void fill_disc(OccupancyGrid& grid, const Vec3& center, const Vec3& normal, double radius) {
  const Plane plane = Plane::from_point_normal(center, normal);
  const PlaneFrame frame = PlaneFrame::from_plane(plane, center);
  const double step = 0.5 * grid.resolution();
  const int n = static_cast<int>(std::ceil(radius / step));
  for (int j = -n; j <= n; ++j) {
    for (int i = -n; i <= n; ++i) {
      const Vec2 q{i * step, j * step};
      if (q.norm() <= radius + 1e-9) grid.mark_occupied_at(frame.to_world(q));
    }
  }
  grid.mark_occupied_at(center);
}

void export_grid(const OccupancyGrid& grid, std::ostream& out) {
  nlohmann::json j;
  j["origin"] = {grid.origin().x(), grid.origin().y(), grid.origin().z()};
  j["resolution"] = grid.resolution();
  j["dims"] = {grid.dims().x(), grid.dims().y(), grid.dims().z()};
  auto voxels = nlohmann::json::array();
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto s = grid.state(grid.unlinear(k));
    if (s == CellState::kUnknown) continue;
    voxels.push_back({k, s == CellState::kOccupied ? "occupied" : "free"});
  }
  j["voxels"] = std::move(voxels);
  out << j.dump() << '\n';
}

void write_grid_svg(const OccupancyGrid& grid, double z_min, double z_max, std::ostream& out) {
  const double px = 40.0;  // pixels per meter
  const double res = grid.resolution();
  const auto& d = grid.dims();
  const double w = d.x() * res * px;
  const double h = d.y() * res * px;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (int y = 0; y < d.y(); ++y) {
    for (int x = 0; x < d.x(); ++x) {
      bool occ = false;
      for (int z = 0; z < d.z() && !occ; ++z) {
        const double zc = grid.center({x, y, z}).z();
        if (zc < z_min || zc > z_max) continue;
        occ = grid.state({x, y, z}) == CellState::kOccupied;
      }
      if (!occ) continue;
      out << "<rect x=\"" << x * res * px << "\" y=\"" << h - (y + 1) * res * px << "\" width=\""
          << res * px << "\" height=\"" << res * px << "\" fill=\"#777\"/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace glassnav
