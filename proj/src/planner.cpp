#include "glassnav/planner.hpp"

#include <algorithm>
#include <cmath>
#include <array>
#include <deque>
#include <limits>
#include <queue>
#include <unordered_map>
#include <unordered_set>

#include "glassnav/error.hpp"

namespace glassnav {

namespace {

struct VoxelPath {
  std::vector<Index3> voxels;
  std::unordered_set<std::size_t> escape;  // soft voxels the path may use
};

const std::vector<Index3>& neighbours26() {
  static const std::vector<Index3> n = [] {
    std::vector<Index3> out;
    for (int z = -1; z <= 1; ++z)
      for (int y = -1; y <= 1; ++y)
        for (int x = -1; x <= 1; ++x)
          if (x != 0 || y != 0 || z != 0) out.emplace_back(x, y, z);
    return out;
  }();
  return n;
}

double octile(const Index3& a, const Index3& b) {
  std::array<int, 3> d{std::abs(a.x() - b.x()), std::abs(a.y() - b.y()), std::abs(a.z() - b.z())};
  std::sort(d.begin(), d.end());
  return std::sqrt(3.0) * d[0] + std::sqrt(2.0) * (d[1] - d[0]) + (d[2] - d[1]);
}

// Shortest run of non-occupied voxels from `from` to the nearest voxel
// outside the soft inflation. Empty if none within reach.
std::vector<Index3> escape_run(const OccupancyGrid& grid, const Index3& from) {
  if (!grid.soft_blocked(from)) return {from};
  std::unordered_map<std::size_t, std::size_t> parent;
  std::deque<Index3> queue{from};
  parent[grid.linear(from)] = grid.linear(from);
  const int reach = static_cast<int>(std::ceil(2.0 * grid.soft_radius() / grid.resolution())) + 2;
  while (!queue.empty()) {
    const Index3 cur = queue.front();
    queue.pop_front();
    for (const auto& o : neighbours26()) {
      const Index3 nb = cur + o;
      if (!grid.in_bounds(nb) || (nb - from).cwiseAbs().maxCoeff() > reach) continue;
      const std::size_t k = grid.linear(nb);
      if (parent.count(k) != 0 || grid.state(nb) == CellState::kOccupied) continue;
      parent[k] = grid.linear(cur);
      if (!grid.soft_blocked(nb)) {
        std::vector<Index3> run{nb};
        std::size_t p = grid.linear(cur);
        while (true) {
          run.push_back(grid.unlinear(p));
          if (p == grid.linear(from)) break;
          p = parent[p];
        }
        std::reverse(run.begin(), run.end());
        return run;
      }
      queue.push_back(nb);
    }
  }
  return {};
}

std::optional<std::vector<Index3>> astar(const OccupancyGrid& grid, const Index3& s,
                                         const Index3& g) {
  thread_local std::vector<double> cost;
  thread_local std::vector<std::int64_t> parent;
  thread_local std::vector<std::uint32_t> stamp;
  thread_local std::uint32_t generation = 0;
  if (cost.size() != grid.size()) {
    cost.assign(grid.size(), 0.0);
    parent.assign(grid.size(), -1);
    stamp.assign(grid.size(), 0);
    generation = 0;
  }
  ++generation;
  using Entry = std::pair<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t ks = grid.linear(s);
  const std::size_t kg = grid.linear(g);
  stamp[ks] = generation;
  cost[ks] = 0.0;
  parent[ks] = -1;
  open.emplace(octile(s, g), ks);
  static const double step_cost[4] = {0.0, 1.0, std::sqrt(2.0), std::sqrt(3.0)};
  while (!open.empty()) {
    const auto [f, k] = open.top();
    open.pop();
    const Index3 cur = grid.unlinear(k);
    const double gk = cost[k];
    if (f > gk + octile(cur, g) + 1e-6) continue;  // stale entry
    if (k == kg) break;
    for (const auto& o : neighbours26()) {
      const Index3 nb = cur + o;
      if (!grid.in_bounds(nb)) continue;
      const std::size_t kn = grid.linear(nb);
      if (kn != kg && grid.soft_blocked(nb)) continue;
      const double c = gk + step_cost[o.cwiseAbs().sum()];
      if (stamp[kn] == generation && cost[kn] <= c) continue;
      stamp[kn] = generation;
      cost[kn] = c;
      parent[kn] = static_cast<std::int64_t>(k);
      open.emplace(c + octile(nb, g), kn);
    }
  }
  if (stamp[kg] != generation) return std::nullopt;
  std::vector<Index3> path;
  for (std::int64_t k = static_cast<std::int64_t>(kg); k >= 0; k = parent[static_cast<std::size_t>(k)]) {
    path.push_back(grid.unlinear(static_cast<std::size_t>(k)));
    if (static_cast<std::size_t>(k) == ks) break;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

std::optional<VoxelPath> voxel_path(const OccupancyGrid& grid, const Index3& s, const Index3& g) {
  VoxelPath out;
  const auto head = escape_run(grid, s);
  const auto tail = escape_run(grid, g);
  if (head.empty() || tail.empty()) return std::nullopt;
  for (const auto& v : head) out.escape.insert(grid.linear(v));
  for (const auto& v : tail) out.escape.insert(grid.linear(v));
  const auto mid = astar(grid, head.back(), tail.back());
  if (!mid) return std::nullopt;
  out.voxels.assign(head.begin(), head.end() - 1);
  out.voxels.insert(out.voxels.end(), mid->begin(), mid->end());
  for (auto it = tail.rbegin() + 1; it != tail.rend(); ++it) out.voxels.push_back(*it);
  return out;
}

bool passable(const OccupancyGrid& grid, const std::unordered_set<std::size_t>& escape,
              const Vec3& p) {
  const auto i = grid.voxel_of(p);
  if (!i) return false;
  return !grid.soft_blocked(*i) || escape.count(grid.linear(*i)) != 0;
}

bool segment_clear(const OccupancyGrid& grid, const std::unordered_set<std::size_t>& escape,
                   const Vec3& a, const Vec3& b) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / (0.25 * grid.resolution()))));
  for (int i = 0; i <= n; ++i) {
    if (!passable(grid, escape, a + (b - a) * (double(i) / n))) return false;
  }
  return true;
}

std::vector<Vec3> shortcut(const OccupancyGrid& grid, const std::unordered_set<std::size_t>& escape,
                           const std::vector<Vec3>& pts) {
  if (pts.size() <= 2) return pts;
  std::vector<Vec3> out{pts.front()};
  std::size_t i = 0;
  while (i + 1 < pts.size()) {
    std::size_t best = i + 1;
    for (std::size_t j = i + 2; j < pts.size(); ++j) {
      if (segment_clear(grid, escape, pts[i], pts[j])) {
        best = j;
      } else if (j > best + 3) {
        break;
      }
    }
    out.push_back(pts[best]);
    i = best;
  }
  return out;
}

double yaw_step(double yaw, double& rate, double target, const DynamicsLimits& lim, double dt) {
  const double e = wrap_angle(target - yaw);
  const double want = std::copysign(
      std::min({lim.yaw_rate_max, std::sqrt(2.0 * lim.yaw_acc_max * std::abs(e)), std::abs(e) / dt}),
      e);
  const double dr = std::clamp(want - rate, -lim.yaw_acc_max * dt, lim.yaw_acc_max * dt);
  rate = std::clamp(rate + dr, -lim.yaw_rate_max, lim.yaw_rate_max);
  return wrap_angle(yaw + rate * dt);
}

struct DensePath {
  std::vector<Vec3> p;
  std::vector<bool> stop;  // forced zero speed (sharp corner)
};

void append_line(DensePath& d, const Vec3& a, const Vec3& b, double ds) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / ds)));
  for (int i = 1; i <= n; ++i) {
    d.p.push_back(a + (b - a) * (double(i) / n));
    d.stop.push_back(false);
  }
}

std::vector<Vec3> bezier(const Vec3& a, const Vec3& c, const Vec3& b, double ds) {
  const double approx = (c - a).norm() + (b - c).norm();
  const int n = std::max(2, static_cast<int>(std::ceil(approx / ds)));
  std::vector<Vec3> out;
  for (int i = 1; i <= n; ++i) {
    const double t = double(i) / n;
    out.push_back((1 - t) * (1 - t) * a + 2 * (1 - t) * t * c + t * t * b);
  }
  return out;
}

double piece_length(const std::vector<Vec3>& p) {
  double acc = 0.0;
  for (std::size_t k = 1; k < p.size(); ++k) acc += (p[k] - p[k - 1]).norm();
  return acc;
}

// Rest-to-rest speed profile along a dense polyline, resampled every dt.
std::vector<Vec3> profile_piece(const std::vector<Vec3>& p, double s_before, double total_len,
                                const DynamicsLimits& limits, const PlannerOptions& opts) {
  const std::size_t n = p.size();
  std::vector<double> s(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) s[k] = s[k - 1] + (p[k] - p[k - 1]).norm();
  if (s.back() < 1e-9) return {p.front()};
  std::vector<double> turn(n, 0.0);
  std::vector<double> kappa(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    const Vec3 a = p[k] - p[k - 1];
    const Vec3 b = p[k + 1] - p[k];
    const double la = a.norm();
    const double lb = b.norm();
    if (la < 1e-12 || lb < 1e-12) continue;
    turn[k] = std::acos(std::clamp(a.dot(b) / (la * lb), -1.0, 1.0));
    kappa[k] = turn[k] / (0.5 * (la + lb));
  }

  const double dt = opts.dt;
  const double a_tot = opts.accel_fraction * limits.a_max;
  const double a_lat = opts.lateral_acc_fraction * limits.a_max;
  std::vector<double> v(n, 0.0);
  for (std::size_t k = 1; k + 1 < n; ++k) {
    double lim = limits.v_max;
    if (kappa[k] > 1e-9) {
      lim = std::min({lim, std::sqrt(a_lat / kappa[k]), 0.9 * limits.yaw_rate_max / kappa[k]});
      // A polyline vertex turns the velocity within one tick.
      lim = std::min(lim, 0.5 * a_tot * dt / turn[k]);
    }
    if (opts.slow_zone > 0.0 && total_len - (s_before + s[k]) <= opts.slow_zone) {
      lim = std::min(lim, opts.slow_speed);
    }
    v[k] = lim;
  }
  const auto tangential = [&](std::size_t k, double vk) {
    const double an = vk * vk * kappa[k];
    return std::sqrt(std::max(0.0, a_tot * a_tot - an * an));
  };
  for (std::size_t k = 0; k + 1 < n; ++k) {
    v[k + 1] = std::min(v[k + 1], std::sqrt(v[k] * v[k] + 2.0 * tangential(k, v[k]) * (s[k + 1] - s[k])));
  }
  for (std::size_t k = n - 1; k > 0; --k) {
    v[k - 1] = std::min(v[k - 1], std::sqrt(v[k] * v[k] + 2.0 * tangential(k, v[k]) * (s[k] - s[k - 1])));
  }
  std::vector<double> t(n, 0.0);
  for (std::size_t k = 1; k < n; ++k) {
    const double vm = v[k] + v[k - 1];
    t[k] = t[k - 1] + (vm > 1e-12 ? 2.0 * (s[k] - s[k - 1]) / vm : std::sqrt(2.0 * (s[k] - s[k - 1]) / a_tot));
  }
  // Slowing down uniformly by a factor >= 1 keeps every limit satisfied.
  const int ticks = std::max(1, static_cast<int>(std::ceil(t.back() / dt - 1e-9)));
  const double scale = ticks * dt / t.back();
  std::vector<Vec3> out;
  out.reserve(static_cast<std::size_t>(ticks) + 1);
  std::size_t k = 0;
  for (int i = 0; i <= ticks; ++i) {
    if (i == ticks) {
      out.push_back(p.back());
      break;
    }
    const double tc = i * dt / scale;
    while (k + 1 < n && t[k + 1] < tc) ++k;
    const double h = t[k + 1] - t[k];
    const double dsk = s[k + 1] - s[k];
    const double tau = tc - t[k];
    const double acc = h > 0.0 ? 2.0 * (dsk - v[k] * h) / (h * h) : 0.0;
    const double sk = std::clamp(v[k] * tau + 0.5 * acc * tau * tau, 0.0, dsk);
    out.push_back(dsk > 0.0 ? Vec3(p[k] + (p[k + 1] - p[k]) * (sk / dsk)) : p[k]);
  }
  return out;
}

}  // namespace

double Trajectory::length() const {
  double acc = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    acc += (samples[i].position - samples[i - 1].position).norm();
  }
  return acc;
}

Trajectory time_parameterize(const std::vector<Vec3>& waypoints, double start_yaw,
                             const DynamicsLimits& limits, const PlannerOptions& opts,
                             const OccupancyGrid* grid) {
  // Drop repeated waypoints.
  std::vector<Vec3> wp;
  for (const auto& p : waypoints) {
    if (wp.empty() || (p - wp.back()).norm() > 1e-9) wp.push_back(p);
  }
  Trajectory traj;
  if (wp.empty()) return traj;
  if (wp.size() == 1) {
    traj.samples.push_back({0.0, wp[0], start_yaw});
    return traj;
  }

  const double ds = 0.02;
  const std::unordered_set<std::size_t> no_escape;
  DensePath dense;
  dense.p.push_back(wp[0]);
  dense.stop.push_back(true);
  Vec3 cursor = wp[0];
  for (std::size_t i = 1; i + 1 < wp.size(); ++i) {
    const Vec3 in = (wp[i] - wp[i - 1]).normalized();
    const Vec3 out = (wp[i + 1] - wp[i]).normalized();
    const double turn = std::acos(std::clamp(in.dot(out), -1.0, 1.0));
    if (turn < 1e-3) {
      append_line(dense, cursor, wp[i], ds);
      cursor = wp[i];
      continue;
    }
    double d = std::min({opts.max_blend, 0.45 * (wp[i] - wp[i - 1]).norm(),
                         0.45 * (wp[i + 1] - wp[i]).norm(), (wp[i] - cursor).norm()});
    std::vector<Vec3> curve;
    for (int attempt = 0; attempt < 5 && d > 0.02; ++attempt, d *= 0.5) {
      curve = bezier(wp[i] - d * in, wp[i], wp[i] + d * out, 0.25 * ds);
      bool ok = true;
      if (grid != nullptr) {
        for (const auto& q : curve) {
          if (grid->hard_blocked_at(q) && !grid->hard_blocked_at(wp[i])) {
            ok = false;
            break;
          }
        }
      }
      if (ok) break;
      curve.clear();
    }
    if (curve.empty() || turn > 2.8) {
      append_line(dense, cursor, wp[i], ds);
      dense.stop.back() = true;
      cursor = wp[i];
      continue;
    }
    append_line(dense, cursor, wp[i] - d * in, ds);
    for (const auto& q : curve) {
      dense.p.push_back(q);
      dense.stop.push_back(false);
    }
    cursor = curve.back();
  }
  append_line(dense, cursor, wp.back(), ds);
  dense.stop.back() = true;

  // Split at forced stops; each piece starts and ends at rest and is
  // stretched to a whole number of ticks so the stop lands on a sample.
  const double dt = opts.dt;
  double total_len = 0.0;
  for (std::size_t k = 1; k < dense.p.size(); ++k) total_len += (dense.p[k] - dense.p[k - 1]).norm();
  std::vector<TrajectorySample> out;
  double yaw = start_yaw;
  double rate = 0.0;
  double t_now = 0.0;
  double s_before = 0.0;
  out.push_back({0.0, dense.p.front(), yaw});
  std::size_t i0 = 0;
  while (i0 + 1 < dense.p.size()) {
    std::size_t i1 = i0 + 1;
    while (i1 + 1 < dense.p.size() && !dense.stop[i1]) ++i1;
    const std::vector<Vec3> piece(dense.p.begin() + static_cast<std::ptrdiff_t>(i0),
                                  dense.p.begin() + static_cast<std::ptrdiff_t>(i1) + 1);
    const auto pos = profile_piece(piece, s_before, total_len, limits, opts);
    s_before += piece_length(piece);
    i0 = i1;
    if (pos.size() < 2) continue;

    // Turn in place first when the new direction is far off the current yaw.
    Vec3 dir = Vec3::Zero();
    for (std::size_t i = 1; i < piece.size() && dir.head<2>().norm() < 1e-9; ++i) dir = piece[i] - piece[0];
    if (dir.head<2>().norm() > 1e-9) {
      const double heading = std::atan2(dir.y(), dir.x());
      if (std::abs(wrap_angle(heading - yaw)) > opts.hover_turn_threshold) {
        const auto turn = turn_in_place(pos.front(), yaw, heading, limits, dt);
        for (std::size_t i = 1; i < turn.samples.size(); ++i) {
          out.push_back({t_now + turn.samples[i].t, turn.samples[i].position, turn.samples[i].yaw});
        }
        t_now = out.back().t;
        yaw = out.back().yaw;
        rate = 0.0;
      }
    }
    double heading = yaw;
    for (std::size_t i = 1; i < pos.size(); ++i) {
      const Vec3 d = pos[i] - pos[i - 1];
      if (d.head<2>().norm() > 0.2 * limits.v_max * dt) heading = std::atan2(d.y(), d.x());
      yaw = yaw_step(yaw, rate, heading, limits, dt);
      t_now += dt;
      out.push_back({t_now, pos[i], yaw});
    }
  }
  traj.samples = std::move(out);
  return traj;
}

std::optional<std::vector<Vec3>> grid_path(const OccupancyGrid& grid, const Vec3& start,
                                           const Vec3& goal) {
  const auto s = grid.voxel_of(start);
  const auto g = grid.voxel_of(goal);
  if (!s || !g) throw Error(ErrorCode::kPoseOutOfBounds, "start or goal outside the map");
  const auto vp = voxel_path(grid, *s, *g);
  if (!vp) return std::nullopt;
  std::vector<Vec3> pts;
  for (const auto& v : vp->voxels) pts.push_back(grid.center(v));
  pts.front() = start;
  pts.back() = goal;
  if (pts.size() == 1) pts.push_back(goal);
  return pts;
}

std::optional<Trajectory> plan_standard(const OccupancyGrid& grid, const Vec3& start,
                                        double start_yaw, const Vec3& goal,
                                        const DynamicsLimits& limits, const PlannerOptions& opts) {
  const auto s = grid.voxel_of(start);
  const auto g = grid.voxel_of(goal);
  if (!s || !g) throw Error(ErrorCode::kPoseOutOfBounds, "start or goal outside the map");
  if (grid.state(*s) == CellState::kOccupied) throw Error(ErrorCode::kStartOccupied, "start voxel occupied");
  if (grid.state(*g) == CellState::kOccupied) throw Error(ErrorCode::kGoalOccupied, "goal voxel occupied");
  const auto vp = voxel_path(grid, *s, *g);
  if (!vp) return std::nullopt;
  std::vector<Vec3> pts;
  pts.push_back(start);
  for (std::size_t i = 1; i + 1 < vp->voxels.size(); ++i) pts.push_back(grid.center(vp->voxels[i]));
  pts.push_back(goal);
  const auto smooth = shortcut(grid, vp->escape, pts);
  return time_parameterize(smooth, start_yaw, limits, opts, &grid);
}

Trajectory straight_trajectory(const Vec3& from, const Vec3& to, double yaw, double speed,
                               const DynamicsLimits& limits, double dt) {
  Trajectory traj;
  const double len = (to - from).norm();
  const double vmax = std::min(speed, limits.v_max);
  const double a = limits.a_max;
  // Symmetric trapezoid (or triangle) in arc length.
  const double t_acc = std::min(vmax / a, std::sqrt(len / a));
  const double v_peak = a * t_acc;
  const double d_acc = 0.5 * a * t_acc * t_acc;
  const double t_cruise = v_peak > 0.0 ? (len - 2.0 * d_acc) / v_peak : 0.0;
  const double total = 2.0 * t_acc + t_cruise;
  const auto arc = [&](double t) {
    if (t <= t_acc) return 0.5 * a * t * t;
    if (t <= t_acc + t_cruise) return d_acc + v_peak * (t - t_acc);
    const double r = std::max(0.0, total - t);
    return len - 0.5 * a * r * r;
  };
  const Vec3 dir = len > 0.0 ? Vec3((to - from) / len) : Vec3::Zero();
  for (int i = 0;; ++i) {
    const double t = i * dt;
    if (t >= total) {
      traj.samples.push_back({t, to, yaw});
      break;
    }
    traj.samples.push_back({t, from + dir * std::clamp(arc(t), 0.0, len), yaw});
  }
  return traj;
}

Trajectory turn_in_place(const Vec3& at, double yaw_from, double yaw_to,
                         const DynamicsLimits& limits, double dt) {
  Trajectory traj;
  double yaw = yaw_from;
  double rate = 0.0;
  traj.samples.push_back({0.0, at, yaw});
  for (int i = 1; i < 100000; ++i) {
    yaw = yaw_step(yaw, rate, yaw_to, limits, dt);
    traj.samples.push_back({i * dt, at, yaw});
    if (std::abs(wrap_angle(yaw_to - yaw)) < 1e-3 && std::abs(rate) < 1e-3) break;
  }
  return traj;
}

std::optional<SurfaceHit> segment_check(const Vec3& a, const Vec3& b,
                                        const SurfaceRegistry& registry, double step,
                                        double radius, const std::vector<int>& exclude) {
  const double len = (b - a).norm();
  const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
  for (int i = 0; i <= n; ++i) {
    const Vec3 p = a + (b - a) * (double(i) / n);
    for (const auto& s : registry.surfaces()) {
      if (s.status != SurfaceStatus::kPotential) continue;
      if (std::find(exclude.begin(), exclude.end(), s.id) != exclude.end()) continue;
      if (s.polygon.distance_to(p) <= radius) return SurfaceHit{s.id, double(i) / n, p};
    }
  }
  return std::nullopt;
}

std::optional<SurfaceHit> safety_check(const Trajectory& traj, const SurfaceRegistry& registry,
                                       double step, double radius, const std::vector<int>& exclude) {
  if (!(step > 0.0)) throw Error(ErrorCode::kInvalidArgument, "step must be positive");
  if (traj.empty()) return std::nullopt;
  std::vector<const GlassSurface*> active;
  for (const auto& s : registry.surfaces()) {
    if (s.status != SurfaceStatus::kPotential) continue;
    if (std::find(exclude.begin(), exclude.end(), s.id) != exclude.end()) continue;
    active.push_back(&s);
  }
  if (active.empty()) return std::nullopt;
  const auto test = [&](const Vec3& p, double t) -> std::optional<SurfaceHit> {
    for (const auto* s : active) {
      if (s->polygon.distance_to(p) <= radius) return SurfaceHit{s->id, t, p};
    }
    return std::nullopt;
  };
  if (auto h = test(traj.samples.front().position, traj.samples.front().t)) return h;
  double next = step;
  double acc = 0.0;
  for (std::size_t i = 1; i < traj.samples.size(); ++i) {
    const auto& a = traj.samples[i - 1];
    const auto& b = traj.samples[i];
    const double seg = (b.position - a.position).norm();
    while (seg > 0.0 && acc + seg >= next) {
      const double f = (next - acc) / seg;
      const Vec3 p = a.position + f * (b.position - a.position);
      if (auto h = test(p, a.t + f * (b.t - a.t))) return h;
      next += step;
    }
    acc += seg;
  }
  return test(traj.samples.back().position, traj.samples.back().t);
}

}  // namespace glassnav
