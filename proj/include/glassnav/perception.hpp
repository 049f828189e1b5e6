#pragma once

// Per-frame glass surface extraction from a segmentation mask and a depth
// image, and fusion of the per-frame candidates into a registry.

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string_view>
#include <utility>
#include <vector>

#include "glassnav/geometry.hpp"
#include "glassnav/pose.hpp"

namespace glassnav {

template <typename T>
struct Image {
  int width{0};
  int height{0};
  std::vector<T> data;

  Image() = default;
  Image(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<std::size_t>(w * h), fill) {}

  T& at(int u, int v) { return data[static_cast<std::size_t>(v * width + u)]; }
  const T& at(int u, int v) const { return data[static_cast<std::size_t>(v * width + u)]; }
  bool inside(int u, int v) const { return u >= 0 && v >= 0 && u < width && v < height; }
};

using DepthImage = Image<double>;
using Mask = Image<std::uint8_t>;

/// Pinhole camera. The optical frame is x right, y down, z forward and the
/// camera sits at the agent position looking along its yaw.
struct CameraModel {
  int width{64};
  int height{48};
  double fx{40.0};
  double fy{40.0};
  double cx{32.0};
  double cy{24.0};
  double max_range{6.0};

  void validate() const;
  /// Optical-frame direction of pixel (u, v) with unit z component.
  Vec3 optical_ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }
  /// Camera-to-world rotation for an agent pose.
  static Eigen::Matrix3d rotation(const Pose& pose);
};

struct SegmentationMask {
  Mask mask;
  double confidence{0.0};
};

struct FrameInput {
  DepthImage depth;
  std::vector<SegmentationMask> masks;
  Pose pose;
};

enum class SurfaceStatus { kPotential, kConfirmed, kInvalidated };

std::string_view to_string(SurfaceStatus s);

struct GlassSurface {
  int id{-1};
  Vec3 centroid{Vec3::Zero()};
  Vec3 normal{Vec3::UnitX()};
  PlanarPolygon polygon;
  std::vector<Vec3> cloud;
  SurfaceStatus status{SurfaceStatus::kPotential};
  int observation_count{1};
};

struct PerceptionParams {
  double tau_s{0.75};   // mask confidence threshold
  double tau_n{0.65};   // normal angle gate, rad
  double tau_c{1.0};    // centroid distance gate, m
  double tau_i{0.1};    // IoU gate
  int boundary_dilation{2};  // pixels
  double cloud_spacing{0.1};  // m
  double ransac_tol{0.05};    // m
  int ransac_iterations{100};
  /// Candidates whose plane explains fewer boundary points are skipped.
  double min_inlier_fraction{0.5};
  std::uint64_t seed{0};

  void validate() const;
};

/// Pixels within `dilation` (Chebyshev) outside the mask, plus mask pixels
/// lying on the image border. Throws Error{kEmptyMask}.
std::vector<std::pair<int, int>> extract_boundary(const Mask& mask, int dilation);

/// Back-projects a pixel at z-depth `depth`. Throws Error{kInvalidDepth}.
Vec3 pixel_to_world(double u, double v, double depth, const CameraModel& cam, const Pose& pose);

/// Candidate surfaces (status Potential, id -1) from one frame.
std::vector<GlassSurface> detect_glass_frame(const FrameInput& frame, const CameraModel& cam,
                                             const PerceptionParams& params);

/// Builds a surface from boundary points already on `plane`.
GlassSurface make_surface(const PlanarPolygon& polygon, double cloud_spacing);

/// Fuses `candidate` into `existing`. On a failed refit or union the
/// existing surface is returned unchanged.
GlassSurface merge_surfaces(const GlassSurface& existing, const GlassSurface& candidate,
                            const PerceptionParams& params);

class SurfaceRegistry {
 public:
  explicit SurfaceRegistry(PerceptionParams params = {}) : params_(params) {}

  const PerceptionParams& params() const { return params_; }
  const std::vector<GlassSurface>& surfaces() const { return surfaces_; }
  std::size_t size() const { return surfaces_.size(); }

  /// Index of the best-matching surface, or nullopt for a new one.
  std::optional<std::size_t> associate(const GlassSurface& candidate) const;

  /// Returns the ids of surfaces created or modified.
  std::vector<int> ingest(const std::vector<GlassSurface>& candidates);

  GlassSurface* find(int id);
  const GlassSurface* find(int id) const;
  void set_status(int id, SurfaceStatus status);
  /// Id of the surface now holding `id`, following merges made by fusion.
  int resolve(int id) const;

  /// True if the two surfaces pass the normal, centroid and IoU gates.
  bool gates_pass(const GlassSurface& a, const GlassSurface& b) const;
  /// No two Potential surfaces pass all gates.
  bool consistent() const;

  void dump_ndjson(std::ostream& out) const;

 private:
  void consolidate(std::vector<int>& touched);

  PerceptionParams params_;
  std::vector<GlassSurface> surfaces_;
  std::map<int, int> merged_into_;
  int next_id_{0};
};

}  // namespace glassnav
