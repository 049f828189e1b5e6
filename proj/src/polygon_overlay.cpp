// Boolean overlay of two simple polygons via their edge arrangement.
//
// Every edge of each ring is split at all crossings with the other ring.
// Each resulting sub-edge is then classified against the other polygon
// (inside, outside, shared with the same direction, shared with the opposite
// direction). Union and intersection boundaries are unions of classified
// sub-edges, and their areas follow directly from the shoelace sum over the
// directed edges, so no loop reconstruction is needed for IoU.

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "glassnav/geometry.hpp"

namespace glassnav::poly2d {

namespace {

double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

class PointPool {
 public:
  explicit PointPool(double eps) : eps_(eps) {}

  int intern(const Vec2& p) {
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if ((pts_[i] - p).norm() <= eps_) return static_cast<int>(i);
    }
    pts_.push_back(p);
    return static_cast<int>(pts_.size() - 1);
  }

  const Vec2& operator[](int i) const { return pts_[static_cast<std::size_t>(i)]; }

 private:
  double eps_;
  std::vector<Vec2> pts_;
};

struct Edge {
  int from;
  int to;
};

enum class Side { kInside, kOutside, kSame, kOpposite };

// Split parameters along each edge of `a` caused by edges of `b` (and the
// symmetric ones for `b`).
void collect_splits(std::span<const Vec2> a, std::span<const Vec2> b, double eps,
                    std::vector<std::vector<double>>& ta, std::vector<std::vector<double>>& tb) {
  const std::size_t na = a.size();
  const std::size_t nb = b.size();
  for (std::size_t i = 0; i < na; ++i) {
    const Vec2& p = a[i];
    const Vec2 r = a[(i + 1) % na] - p;
    const double rl = r.norm();
    if (rl <= eps) continue;
    for (std::size_t j = 0; j < nb; ++j) {
      const Vec2& q = b[j];
      const Vec2 s = b[(j + 1) % nb] - q;
      const double sl = s.norm();
      if (sl <= eps) continue;
      const double rxs = cross2(r, s);
      const Vec2 qp = q - p;
      if (std::abs(rxs) <= 1e-12 * rl * sl) {
        if (std::abs(cross2(qp, r)) / rl > eps) continue;  // parallel, not collinear
        for (const Vec2& x : {q, Vec2(q + s)}) {
          const double t = (x - p).dot(r) / (rl * rl);
          if (t * rl > eps && (1.0 - t) * rl > eps) ta[i].push_back(t);
        }
        for (const Vec2& x : {p, Vec2(p + r)}) {
          const double u = (x - q).dot(s) / (sl * sl);
          if (u * sl > eps && (1.0 - u) * sl > eps) tb[j].push_back(u);
        }
        continue;
      }
      const double t = cross2(qp, s) / rxs;
      const double u = cross2(qp, r) / rxs;
      if (t * rl < -eps || (t - 1.0) * rl > eps) continue;
      if (u * sl < -eps || (u - 1.0) * sl > eps) continue;
      ta[i].push_back(std::clamp(t, 0.0, 1.0));
      tb[j].push_back(std::clamp(u, 0.0, 1.0));
    }
  }
}

std::vector<Edge> split_ring(std::span<const Vec2> ring, std::vector<std::vector<double>>& params,
                             PointPool& pool) {
  std::vector<Edge> edges;
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % n];
    auto& ts = params[i];
    std::sort(ts.begin(), ts.end());
    int prev = pool.intern(p);
    for (double t : ts) {
      const int k = t <= 0.0 ? pool.intern(p) : (t >= 1.0 ? pool.intern(q) : pool.intern(p + t * (q - p)));
      if (k != prev) {
        edges.push_back({prev, k});
        prev = k;
      }
    }
    const int last = pool.intern(q);
    if (last != prev) edges.push_back({prev, last});
  }
  return edges;
}

Side classify(const Edge& e, const PointPool& pool, const std::map<std::pair<int, int>, int>& other,
              std::span<const Vec2> other_ring, double eps) {
  if (other.count({e.from, e.to}) != 0) return Side::kSame;
  if (other.count({e.to, e.from}) != 0) return Side::kOpposite;
  const Vec2 mid = 0.5 * (pool[e.from] + pool[e.to]);
  const std::size_t n = other_ring.size();
  // Collinear overlap that snapping failed to align: decide by direction.
  for (std::size_t j = 0; j < n; ++j) {
    const Vec2& a = other_ring[j];
    const Vec2& b = other_ring[(j + 1) % n];
    const Vec2 ab = b - a;
    const double len = ab.norm();
    if (len <= eps) continue;
    const double t = (mid - a).dot(ab) / (len * len);
    if (t < 0.0 || t > 1.0) continue;
    if (std::abs(cross2(ab, mid - a)) / len > 4.0 * eps) continue;
    const Vec2 dir = pool[e.to] - pool[e.from];
    if (std::abs(cross2(dir, ab)) > 1e-6 * dir.norm() * len) continue;
    return dir.dot(ab) > 0.0 ? Side::kSame : Side::kOpposite;
  }
  return contains(other_ring, mid, 0.0) ? Side::kInside : Side::kOutside;
}

double edge_area(const std::vector<Edge>& edges, const PointPool& pool) {
  double acc = 0.0;
  for (const auto& e : edges) acc += cross2(pool[e.from], pool[e.to]);
  return 0.5 * acc;
}

std::vector<std::vector<Vec2>> chain_loops(const std::vector<Edge>& edges, const PointPool& pool) {
  std::map<int, std::vector<std::size_t>> outgoing;
  for (std::size_t i = 0; i < edges.size(); ++i) outgoing[edges[i].from].push_back(i);
  std::vector<bool> used(edges.size(), false);
  std::vector<std::vector<Vec2>> loops;
  for (std::size_t start = 0; start < edges.size(); ++start) {
    if (used[start]) continue;
    used[start] = true;
    std::vector<int> verts{edges[start].from};
    std::size_t cur = start;
    bool closed = false;
    for (std::size_t guard = 0; guard <= edges.size(); ++guard) {
      const int v = edges[cur].to;
      if (v == edges[start].from) {
        closed = true;
        break;
      }
      verts.push_back(v);
      const Vec2 din = pool[v] - pool[edges[cur].from];
      std::size_t next = edges.size();
      double best = -std::numeric_limits<double>::infinity();
      for (std::size_t cand : outgoing[v]) {
        if (used[cand]) continue;
        const Vec2 dout = pool[edges[cand].to] - pool[v];
        // Leftmost turn separates loops that only touch at a vertex.
        const double ang = std::atan2(cross2(din, dout), din.dot(dout));
        if (ang > best) {
          best = ang;
          next = cand;
        }
      }
      if (next == edges.size()) break;
      used[next] = true;
      cur = next;
    }
    if (!closed || verts.size() < 3) continue;
    std::vector<Vec2> loop;
    loop.reserve(verts.size());
    for (int v : verts) loop.push_back(pool[v]);
    loops.push_back(std::move(loop));
  }
  return loops;
}

}  // namespace

Overlay overlay(std::span<const Vec2> a_in, std::span<const Vec2> b_in, double eps) {
  Overlay out;
  if (a_in.size() < 3 || b_in.size() < 3) return out;

  // Work relative to a's first vertex for better conditioning.
  const Vec2 shift = a_in.front();
  std::vector<Vec2> a;
  std::vector<Vec2> b;
  a.reserve(a_in.size());
  b.reserve(b_in.size());
  for (const auto& p : a_in) a.push_back(p - shift);
  for (const auto& p : b_in) b.push_back(p - shift);

  std::vector<std::vector<double>> ta(a.size());
  std::vector<std::vector<double>> tb(b.size());
  collect_splits(a, b, eps, ta, tb);

  PointPool pool(eps);
  const auto ea = split_ring(a, ta, pool);
  const auto eb = split_ring(b, tb, pool);

  std::map<std::pair<int, int>, int> set_a;
  std::map<std::pair<int, int>, int> set_b;
  for (const auto& e : ea) set_a[{e.from, e.to}]++;
  for (const auto& e : eb) set_b[{e.from, e.to}]++;

  std::vector<Edge> uni;
  std::vector<Edge> inter;
  for (const auto& e : ea) {
    switch (classify(e, pool, set_b, b, eps)) {
      case Side::kOutside: uni.push_back(e); break;
      case Side::kInside: inter.push_back(e); break;
      case Side::kSame:
        uni.push_back(e);
        inter.push_back(e);
        break;
      case Side::kOpposite: break;
    }
  }
  for (const auto& e : eb) {
    switch (classify(e, pool, set_a, a, eps)) {
      case Side::kOutside: uni.push_back(e); break;
      case Side::kInside: inter.push_back(e); break;
      case Side::kSame:
      case Side::kOpposite: break;
    }
  }

  out.union_area = std::max(0.0, edge_area(uni, pool));
  out.intersection_area = std::max(0.0, edge_area(inter, pool));
  out.union_loops = chain_loops(uni, pool);
  for (auto& loop : out.union_loops) {
    for (auto& p : loop) p += shift;
  }
  return out;
}

}  // namespace glassnav::poly2d
