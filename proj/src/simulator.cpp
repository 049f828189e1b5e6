#include "glassnav/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "glassnav/error.hpp"

namespace glassnav {

using nlohmann::json;

namespace {

constexpr double kFrameDepth = 0.06;

Vec3 vec_from(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kScenario, std::string(what) + ": expected [x, y, z]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json vec_to(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Box box_from(const json& j) {
  Box b{vec_from(j.at("min"), "box.min"), vec_from(j.at("max"), "box.max")};
  return b;
}

json box_to(const Box& b) { return {{"min", vec_to(b.min)}, {"max", vec_to(b.max)}}; }

bool axis_aligned(const Vec3& n) {
  Eigen::Index k = 0;
  return n.cwiseAbs().maxCoeff(&k) > 1.0 - 1e-9 && k != 2;
}

std::vector<Box> frame_bars(const GlassPanel& p) {
  const Vec3 w = p.width_axis();
  const Vec3 h = p.height_axis();
  const Vec3 n = p.normal;
  const double fw = p.frame_width;
  auto make = [&](const Vec3& center, double extent_w, double extent_h) {
    const Vec3 half = (0.5 * extent_w * w).cwiseAbs() + (0.5 * extent_h * h).cwiseAbs() +
                      (0.5 * kFrameDepth * n).cwiseAbs();
    return Box{center - half, center + half};
  };
  const double hw = 0.5 * p.width;
  const double hh = 0.5 * p.height;
  return {
      make(p.center + (hw + 0.5 * fw) * w, fw, p.height + 2.0 * fw),
      make(p.center - (hw + 0.5 * fw) * w, fw, p.height + 2.0 * fw),
      make(p.center + (hh + 0.5 * fw) * h, p.width, fw),
      make(p.center - (hh + 0.5 * fw) * h, p.width, fw),
  };
}

std::vector<const Box*> cull_boxes(const std::vector<Box>& boxes, const Pose& pose, double range) {
  std::vector<const Box*> out;
  const Vec3 fwd = pose.forward();
  for (const auto& b : boxes) {
    if (b.distance_to(pose.position) > range) continue;
    bool ahead = false;
    for (int k = 0; k < 8 && !ahead; ++k) {
      const Vec3 corner{(k & 1) ? b.max.x() : b.min.x(), (k & 2) ? b.max.y() : b.min.y(),
                        (k & 4) ? b.max.z() : b.min.z()};
      ahead = fwd.dot(corner - pose.position) > 0.0;
    }
    if (ahead) out.push_back(&b);
  }
  return out;
}

std::optional<double> nearest_hit(const std::vector<const Box*>& boxes, const Vec3& o,
                                  const Vec3& d, double t_max) {
  std::optional<double> best;
  double limit = t_max;
  for (const Box* b : boxes) {
    const auto t = b->intersect(o, d, 1e-9, limit);
    if (t) {
      best = t;
      limit = *t;
    }
  }
  return best;
}

}  // namespace

std::optional<double> Box::intersect(const Vec3& origin, const Vec3& dir, double t_min,
                                     double t_max) const {
  double lo = t_min;
  double hi = t_max;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dir[k]) < 1e-15) {
      if (origin[k] < min[k] || origin[k] > max[k]) return std::nullopt;
      continue;
    }
    double t0 = (min[k] - origin[k]) / dir[k];
    double t1 = (max[k] - origin[k]) / dir[k];
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    if (lo > hi) return std::nullopt;
  }
  return lo;
}

Vec3 GlassPanel::width_axis() const {
  const Vec3 w = Vec3::UnitZ().cross(normal);
  if (w.norm() < 1e-6) return Vec3::UnitX();
  return w.normalized();
}

std::vector<Vec3> GlassPanel::corners() const {
  const Vec3 w = 0.5 * width * width_axis();
  const Vec3 h = 0.5 * height * height_axis();
  return {center - w - h, center + w - h, center + w + h, center - w + h};
}

std::optional<double> GlassPanel::segment_crossing(const Vec3& a, const Vec3& b) const {
  const double da = normal.dot(a - center);
  const double db = normal.dot(b - center);
  const bool crosses = (da > 0.0 && db <= 0.0) || (da < 0.0 && db >= 0.0);
  if (!crosses) return std::nullopt;
  const double s = da / (da - db);
  const Vec3 x = a + s * (b - a) - center;
  if (std::abs(x.dot(width_axis())) > 0.5 * width) return std::nullopt;
  if (std::abs(x.dot(height_axis())) > 0.5 * height) return std::nullopt;
  return s;
}

void Scenario::finalize() {
  opaque = obstacles;
  for (auto& p : glass_panels) {
    p.normal.normalize();
    if (p.frame_width > 0.0) {
      const auto bars = frame_bars(p);
      opaque.insert(opaque.end(), bars.begin(), bars.end());
    }
  }
}

bool Scenario::blocked(const Vec3& p, double margin) const {
  if (!bounds.contains(p, -margin)) return true;
  for (const auto& b : opaque) {
    if (b.distance_to(p) <= margin) return true;
  }
  return false;
}

std::vector<std::string> Scenario::lint() const {
  std::vector<std::string> issues;
  if (!((bounds.max - bounds.min).array() > 0.0).all()) issues.push_back("bounds are empty");
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    if (!((obstacles[i].max - obstacles[i].min).array() >= 0.0).all()) {
      issues.push_back("obstacle " + std::to_string(i) + " has min > max");
    }
  }
  for (const auto& p : glass_panels) {
    const std::string tag = "panel " + std::to_string(p.id);
    if (!(p.width > 0.0) || !(p.height > 0.0)) issues.push_back(tag + " has non-positive size");
    if (!(p.normal.norm() > 0.0)) issues.push_back(tag + " has zero normal");
    if (p.seg_confidence < 0.0 || p.seg_confidence > 1.0) {
      issues.push_back(tag + " confidence outside [0,1]");
    }
    if (p.frame_width < 0.0) issues.push_back(tag + " has negative frame width");
    if (p.frame_width > 0.0 && !axis_aligned(p.normal.normalized())) {
      issues.push_back(tag + " frame requires an axis-aligned horizontal normal");
    }
  }
  for (std::size_t i = 0; i < glass_panels.size(); ++i) {
    for (std::size_t j = i + 1; j < glass_panels.size(); ++j) {
      if (glass_panels[i].id == glass_panels[j].id) issues.push_back("duplicate panel ids");
    }
  }
  const auto check_point = [&](const Vec3& p, const std::string& what) {
    if (!p.allFinite() || !bounds.contains(p)) {
      issues.push_back(what + " outside bounds");
      return;
    }
    for (const auto& b : obstacles) {
      if (b.contains(p)) issues.push_back(what + " inside an obstacle");
    }
  };
  check_point(start.position, "start");
  check_point(goal, "goal");
  if (!(limits.v_max > 0.0 && limits.a_max > 0.0 && limits.yaw_rate_max > 0.0 &&
        limits.yaw_acc_max > 0.0)) {
    issues.push_back("dynamics limits must be positive");
  }
  if (depth_noise < 0.0) issues.push_back("negative depth noise");
  return issues;
}

Scenario scenario_from_json(const json& j) {
  try {
    Scenario s;
    s.name = j.value("name", "");
    s.bounds = box_from(j.at("bounds"));
    for (const auto& o : j.value("obstacles", json::array())) s.obstacles.push_back(box_from(o));
    int next_id = 0;
    for (const auto& g : j.value("glass_panels", json::array())) {
      GlassPanel p;
      p.id = g.value("id", next_id);
      next_id = p.id + 1;
      p.center = vec_from(g.at("center"), "panel.center");
      p.normal = vec_from(g.at("normal"), "panel.normal");
      p.width = g.at("width").get<double>();
      p.height = g.at("height").get<double>();
      const std::string kind = g.value("kind", "true");
      if (kind == "true") {
        p.kind = PanelKind::kTrue;
      } else if (kind == "phantom") {
        p.kind = PanelKind::kPhantom;
      } else {
        throw Error(ErrorCode::kScenario, "panel.kind must be \"true\" or \"phantom\"");
      }
      p.seg_confidence = g.value("seg_confidence", 0.9);
      p.frame_width = g.value("frame_width", 0.0);
      s.glass_panels.push_back(p);
    }
    const auto& st = j.at("start");
    s.start.position = vec_from(st.at("position"), "start.position");
    s.start.yaw = wrap_angle(st.value("yaw", 0.0));
    s.goal = vec_from(j.at("goal"), "goal");
    if (j.contains("limits")) {
      const auto& l = j["limits"];
      s.limits.v_max = l.value("v_m", s.limits.v_max);
      s.limits.a_max = l.value("a_m", s.limits.a_max);
      s.limits.yaw_rate_max = l.value("yaw_rate", s.limits.yaw_rate_max);
      s.limits.yaw_acc_max = l.value("yaw_acc", s.limits.yaw_acc_max);
    }
    if (j.contains("seeds")) s.noise_seed = j["seeds"].value("noise", std::uint64_t{0});
    s.depth_noise = j.value("depth_noise", 0.01);
    const auto issues = s.lint();
    if (!issues.empty()) throw Error(ErrorCode::kScenario, "invalid scenario: " + issues.front());
    s.finalize();
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kScenario, std::string("malformed scenario: ") + e.what());
  }
}

json scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["bounds"] = box_to(s.bounds);
  j["obstacles"] = json::array();
  for (const auto& b : s.obstacles) j["obstacles"].push_back(box_to(b));
  j["glass_panels"] = json::array();
  for (const auto& p : s.glass_panels) {
    j["glass_panels"].push_back({{"id", p.id},
                                 {"center", vec_to(p.center)},
                                 {"normal", vec_to(p.normal)},
                                 {"width", p.width},
                                 {"height", p.height},
                                 {"kind", p.kind == PanelKind::kTrue ? "true" : "phantom"},
                                 {"seg_confidence", p.seg_confidence},
                                 {"frame_width", p.frame_width}});
  }
  j["start"] = {{"position", vec_to(s.start.position)}, {"yaw", s.start.yaw}};
  j["goal"] = vec_to(s.goal);
  j["limits"] = {{"v_m", s.limits.v_max},
                 {"a_m", s.limits.a_max},
                 {"yaw_rate", s.limits.yaw_rate_max},
                 {"yaw_acc", s.limits.yaw_acc_max}};
  j["seeds"] = {{"noise", s.noise_seed}};
  j["depth_noise"] = s.depth_noise;
  return j;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kScenario, "cannot open scenario file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kScenario, std::string("cannot parse scenario: ") + e.what());
  }
  return scenario_from_json(j);
}

std::optional<double> raycast_opaque(const std::vector<Box>& boxes, const Vec3& origin,
                                     const Vec3& dir, double t_max) {
  std::optional<double> best;
  double limit = t_max;
  for (const auto& b : boxes) {
    const auto t = b.intersect(origin, dir, 1e-9, limit);
    if (t) {
      best = t;
      limit = *t;
    }
  }
  return best;
}

DepthImage render_depth(const Scenario& scenario, const Pose& pose, const CameraModel& cam,
                        std::mt19937_64* rng, double sigma) {
  DepthImage img(cam.width, cam.height, 0.0);
  const Eigen::Matrix3d rot = CameraModel::rotation(pose);
  const double corner = cam.optical_ray(0, 0).norm();
  const double corner2 = cam.optical_ray(cam.width - 1, cam.height - 1).norm();
  const auto boxes = cull_boxes(scenario.opaque, pose, cam.max_range * std::max(corner, corner2));
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  for (int v = 0; v < cam.height; ++v) {
    for (int u = 0; u < cam.width; ++u) {
      const Vec3 dir = rot * cam.optical_ray(u, v);
      const auto t = nearest_hit(boxes, pose.position, dir, cam.max_range);
      if (!t) continue;
      double d = *t;
      if (rng != nullptr && sigma > 0.0) d = std::max(1e-3, d + noise(*rng));
      img.at(u, v) = d;
    }
  }
  return img;
}

std::vector<SegmentationMask> render_segmentation(const Scenario& scenario, const Pose& pose,
                                                  const CameraModel& cam,
                                                  const SegmentationOptions& opts,
                                                  std::vector<int>* panel_ids) {
  std::vector<SegmentationMask> out;
  if (panel_ids != nullptr) panel_ids->clear();
  const Eigen::Matrix3d rot = CameraModel::rotation(pose);
  const Eigen::Matrix3d rot_t = rot.transpose();
  const Vec3& o = pose.position;
  const auto boxes = cull_boxes(scenario.opaque, pose, cam.max_range * 2.0);
  const double cos_limit = std::cos(opts.max_incidence);
  for (const auto& p : scenario.glass_panels) {
    const Vec3 to_center = p.center - o;
    const double dist = to_center.norm();
    if (dist < 1e-9 || dist > cam.max_range) continue;
    if (std::abs(p.normal.dot(to_center)) / dist < cos_limit) continue;
    if (std::abs(p.normal.dot(to_center)) < opts.min_distance) continue;

    int u0 = 0;
    int v0 = 0;
    int u1 = cam.width - 1;
    int v1 = cam.height - 1;
    bool all_front = true;
    double umin = std::numeric_limits<double>::infinity();
    double umax = -umin;
    double vmin = umin;
    double vmax = -umin;
    for (const auto& c : p.corners()) {
      const Vec3 q = rot_t * (c - o);
      if (q.z() <= 0.05) {
        all_front = false;
        break;
      }
      umin = std::min(umin, cam.fx * q.x() / q.z() + cam.cx);
      umax = std::max(umax, cam.fx * q.x() / q.z() + cam.cx);
      vmin = std::min(vmin, cam.fy * q.y() / q.z() + cam.cy);
      vmax = std::max(vmax, cam.fy * q.y() / q.z() + cam.cy);
    }
    if (all_front) {
      u0 = std::max(0, static_cast<int>(std::floor(umin)));
      v0 = std::max(0, static_cast<int>(std::floor(vmin)));
      u1 = std::min(cam.width - 1, static_cast<int>(std::ceil(umax)));
      v1 = std::min(cam.height - 1, static_cast<int>(std::ceil(vmax)));
      if (u0 > u1 || v0 > v1) continue;
    }

    SegmentationMask seg;
    seg.mask = Mask(cam.width, cam.height, 0);
    seg.confidence = p.seg_confidence;
    int count = 0;
    const Vec3 wa = p.width_axis();
    const Vec3 ha = p.height_axis();
    for (int v = v0; v <= v1; ++v) {
      for (int u = u0; u <= u1; ++u) {
        const Vec3 dir = rot * cam.optical_ray(u, v);
        const double denom = p.normal.dot(dir);
        if (std::abs(denom) < 1e-12) continue;
        const double t = p.normal.dot(to_center) / denom;
        if (t <= 0.0 || t > cam.max_range) continue;
        const Vec3 x = o + t * dir - p.center;
        if (std::abs(x.dot(wa)) > 0.5 * p.width || std::abs(x.dot(ha)) > 0.5 * p.height) continue;
        if (nearest_hit(boxes, o, dir, t)) continue;
        seg.mask.at(u, v) = 1;
        ++count;
      }
    }
    if (count < opts.min_pixels) continue;
    out.push_back(std::move(seg));
    if (panel_ids != nullptr) panel_ids->push_back(p.id);
  }
  return out;
}

AgentState step_agent(const AgentState& state, const Command& cmd, double dt,
                      const DynamicsLimits& limits) {
  if (!(dt > 0.0)) throw Error(ErrorCode::kInvalidArgument, "dt must be positive");
  AgentState next = state;
  Vec3 dv = cmd.velocity - state.velocity;
  const double dv_max = limits.a_max * dt;
  if (dv.norm() > dv_max) dv *= dv_max / dv.norm();
  Vec3 v = state.velocity + dv;
  if (v.norm() > limits.v_max) v *= limits.v_max / v.norm();
  next.velocity = v;
  next.pose.position = state.pose.position + v * dt;

  const double e = wrap_angle(cmd.yaw - state.pose.yaw);
  double target = std::copysign(
      std::min({limits.yaw_rate_max, std::sqrt(2.0 * limits.yaw_acc_max * std::abs(e)),
                std::abs(e) / dt}),
      e);
  if (cmd.yaw_rate) target = *cmd.yaw_rate + 2.0 * wrap_angle(e - *cmd.yaw_rate * dt);
  const double dr = std::clamp(target - state.yaw_rate, -limits.yaw_acc_max * dt,
                               limits.yaw_acc_max * dt);
  next.yaw_rate = std::clamp(state.yaw_rate + dr, -limits.yaw_rate_max, limits.yaw_rate_max);
  next.pose.yaw = wrap_angle(state.pose.yaw + next.yaw_rate * dt);
  return next;
}

std::optional<ContactEvent> check_contact(const Scenario& scenario, const Pose& prev,
                                          const Pose& cur, const ContactSensorGeometry& sensor,
                                          const std::vector<int>& ignore_panels) {
  std::optional<ContactEvent> best;
  double best_s = std::numeric_limits<double>::infinity();
  const Vec3 tip0 = prev.position + sensor.reach * prev.forward();
  const Vec3 tip1 = cur.position + sensor.reach * cur.forward();
  for (const auto& p : scenario.glass_panels) {
    if (p.kind != PanelKind::kTrue) continue;
    if (std::find(ignore_panels.begin(), ignore_panels.end(), p.id) != ignore_panels.end()) continue;
    for (double side : {0.0, -1.0, 1.0}) {
      const Vec3 a = tip0 + side * sensor.half_width * prev.left();
      const Vec3 b = tip1 + side * sensor.half_width * cur.left();
      const auto s = p.segment_crossing(a, b);
      if (s && *s < best_s) {
        best_s = *s;
        ContactEvent ev;
        ev.position = a + *s * (b - a);
        ev.panel_id = p.id;
        ev.panel_normal = p.normal;
        ev.fraction = *s;
        best = ev;
      }
    }
  }
  return best;
}

bool check_crash(const Scenario& scenario, const Vec3& prev, const Vec3& cur) {
  for (const auto& p : scenario.glass_panels) {
    if (p.kind == PanelKind::kTrue && p.segment_crossing(prev, cur)) return true;
  }
  for (const auto& b : scenario.opaque) {
    if (b.contains(cur)) return true;
  }
  return false;
}

}  // namespace glassnav
