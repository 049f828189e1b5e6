#pragma once

// Voxel occupancy map. Occupied cells are sticky. Two inflation layers are
// kept up to date as cells become occupied: a soft layer at the robot radius
// used for planning and a hard layer at half of it used for execution checks.

#include <cstdint>
#include <optional>
#include <ostream>
#include <vector>

#include "glassnav/perception.hpp"

namespace glassnav {

enum class CellState : std::uint8_t { kUnknown = 0, kFree = 1, kOccupied = 2 };

using Index3 = Eigen::Vector3i;

class OccupancyGrid {
 public:
  OccupancyGrid() = default;
  OccupancyGrid(const Vec3& origin, double resolution, const Index3& dims, double soft_radius = 0.3,
                double hard_radius = 0.15);
  /// Grid covering [lo, hi] at `resolution`.
  static OccupancyGrid covering(const Vec3& lo, const Vec3& hi, double resolution,
                                double soft_radius = 0.3, double hard_radius = 0.15);

  const Vec3& origin() const { return origin_; }
  double resolution() const { return resolution_; }
  const Index3& dims() const { return dims_; }
  std::size_t size() const { return cells_.size(); }
  double soft_radius() const { return soft_radius_; }

  bool in_bounds(const Index3& i) const {
    return (i.array() >= 0).all() && (i.array() < dims_.array()).all();
  }
  std::optional<Index3> voxel_of(const Vec3& p) const;
  Vec3 center(const Index3& i) const {
    return origin_ + (i.cast<double>().array() + 0.5).matrix() * resolution_;
  }
  std::size_t linear(const Index3& i) const {
    return static_cast<std::size_t>(i.x()) +
           static_cast<std::size_t>(dims_.x()) *
               (static_cast<std::size_t>(i.y()) + static_cast<std::size_t>(dims_.y()) * static_cast<std::size_t>(i.z()));
  }
  Index3 unlinear(std::size_t k) const;

  CellState state(const Index3& i) const { return static_cast<CellState>(cells_[linear(i)]); }
  CellState state_at(const Vec3& p) const;
  void mark_free(const Index3& i);
  void mark_occupied(const Index3& i);
  /// Marks the voxel containing p; points outside the grid are ignored.
  void mark_occupied_at(const Vec3& p);

  /// Within the robot radius of an occupied voxel or the grid boundary.
  bool soft_blocked(const Index3& i) const { return (inflation_[linear(i)] & 1u) != 0; }
  bool hard_blocked(const Index3& i) const { return (inflation_[linear(i)] & 2u) != 0; }
  bool soft_blocked_at(const Vec3& p) const;
  bool hard_blocked_at(const Vec3& p) const;

  /// Linear indices in the order they became occupied.
  const std::vector<std::size_t>& occupied_log() const { return occupied_log_; }
  std::size_t count(CellState s) const;

 private:
  void inflate(const Index3& i);

  Vec3 origin_{Vec3::Zero()};
  double resolution_{0.1};
  Index3 dims_{Index3::Zero()};
  double soft_radius_{0.3};
  double hard_radius_{0.15};
  std::vector<std::uint8_t> cells_;
  std::vector<std::uint8_t> inflation_;
  std::vector<Index3> soft_offsets_;
  std::vector<Index3> hard_offsets_;
  std::vector<std::size_t> occupied_log_;
};

/// Frees the voxels from `origin` up to the voxel holding `hit`, which is
/// marked occupied.
void integrate_ray(OccupancyGrid& grid, const Vec3& origin, const Vec3& hit);

/// Throws Error{kPoseOutOfBounds} if the camera is outside the grid.
void integrate_depth(OccupancyGrid& grid, const FrameInput& frame, const CameraModel& cam);

void fill_points(OccupancyGrid& grid, const std::vector<Vec3>& points);

/// Marks the surface cloud, shifted along the normal so that the contact
/// position lies on it. Throws Error{kNotConfirmed}.
void fill_glass(OccupancyGrid& grid, const GlassSurface& surface, const Vec3& contact_position);

/// Occupied disc of `radius` in the plane through `center` with `normal`.
void fill_disc(OccupancyGrid& grid, const Vec3& center, const Vec3& normal, double radius);

/// JSON header {origin, resolution, dims} and the list of known voxels.
void export_grid(const OccupancyGrid& grid, std::ostream& out);

/// Top-down SVG of occupied voxels between two heights.
void write_grid_svg(const OccupancyGrid& grid, double z_min, double z_max, std::ostream& out);

}  // namespace glassnav
