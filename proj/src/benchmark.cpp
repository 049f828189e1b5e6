#include "glassnav/benchmark.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <random>
#include <thread>

#include "glassnav/error.hpp"

namespace glassnav {

namespace {

bool clear_point(const Scenario& s, const Vec3& p, double clearance) {
  if (s.blocked(p, clearance)) return false;
  for (const auto& g : s.glass_panels) {
    const Vec3 d = p - g.center;
    const double u = std::max(0.0, std::abs(d.dot(g.width_axis())) - 0.5 * g.width);
    const double v = std::max(0.0, std::abs(d.dot(g.height_axis())) - 0.5 * g.height);
    const double w = d.dot(g.normal);
    if (std::sqrt(u * u + v * v + w * w) < clearance) return false;
  }
  return true;
}

double sample_std(const std::vector<double>& x, double mean) {
  if (x.size() < 2) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += (v - mean) * (v - mean);
  return std::sqrt(acc / static_cast<double>(x.size() - 1));
}

}  // namespace

std::uint64_t run_seed(std::uint64_t master, int run) {
  std::seed_seq seq{static_cast<std::uint32_t>(master), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(run)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

bool segment_blocked(const Scenario& scenario, const Vec3& a, const Vec3& b) {
  for (const auto& box : scenario.opaque) {
    if (box.intersect(a, b - a, 0.0, 1.0)) return true;
  }
  for (const auto& p : scenario.glass_panels) {
    if (p.segment_crossing(a, b)) return true;
  }
  return false;
}

std::vector<Task> sample_tasks(const Scenario& scenario, int n, std::uint64_t seed,
                               const TaskSampling& opts) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "task count must be at least 1");
  std::mt19937_64 rng(seed);
  const Box& b = scenario.bounds;
  std::uniform_real_distribution<double> ux(b.min.x(), b.max.x());
  std::uniform_real_distribution<double> uy(b.min.y(), b.max.y());
  std::uniform_real_distribution<double> uz(std::max(b.min.z(), opts.z_min),
                                            std::min(b.max.z(), opts.z_max));
  int rejections = 0;
  const auto draw = [&](const Vec3* from) {
    while (true) {
      const Vec3 p{ux(rng), uy(rng), uz(rng)};
      bool ok = clear_point(scenario, p, opts.clearance);
      if (ok && from != nullptr) {
        ok = (p - *from).norm() >= opts.min_separation && segment_blocked(scenario, *from, p);
      }
      if (ok) return p;
      if (++rejections >= opts.max_rejections) {
        throw Error(ErrorCode::kSamplingExhausted,
                    "no valid task after " + std::to_string(rejections) + " rejections");
      }
    }
  };
  std::vector<Task> tasks;
  Vec3 cur = draw(nullptr);
  for (int i = 0; i < n; ++i) {
    const Vec3 next = draw(&cur);
    tasks.push_back({cur, next});
    cur = next;
  }
  return tasks;
}

std::string RunRecord::outcome() const {
  if (crashed) return "crashed";
  return reached == static_cast<int>(tasks.size()) ? "reached" : "infeasible";
}

const MethodStats& BenchmarkResult::stats_for(Method m) const {
  for (const auto& s : stats) {
    if (s.method == m) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "method " + to_string(m) + " was not run");
}

RunRecord run_tasks(Method method, const Scenario& scenario, const std::vector<Task>& tasks,
                    const NavParams& params, std::uint64_t seed, int run_index, bool keep_log) {
  RunRecord rec;
  rec.method = method;
  rec.run = run_index;
  World world = World::for_scenario(scenario, params.perception, params.grid_resolution,
                                    params.robot_radius);
  std::vector<int> panels;
  double t_offset = 0.0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    Scenario s = scenario;
    s.start.position = tasks[i].start;
    const Vec3 d = tasks[i].goal - tasks[i].start;
    s.start.yaw = std::atan2(d.y(), d.x());
    s.goal = tasks[i].goal;
    const auto r = navigate(method, s, params, seed + i, &world);
    TaskRecord t;
    t.task = static_cast<int>(i);
    t.outcome = r.outcome;
    t.duration = r.duration;
    t.path_length = r.path_length;
    t.contacts = r.contact_count;
    t.touches = r.touch_count;
    rec.tasks.push_back(t);
    rec.duration += r.duration;
    rec.path_length += r.path_length;
    rec.contacts += r.contact_count;
    rec.touches += r.touch_count;
    if (r.outcome == Outcome::kReached) ++rec.reached;
    if (r.outcome == Outcome::kCrashed) rec.crashed = true;
    panels.insert(panels.end(), r.panels_on_plans.begin(), r.panels_on_plans.end());
    if (keep_log) {
      for (auto e : r.log) {
        e.t += t_offset;
        rec.log.push_back(e);
      }
      t_offset += r.duration;
    }
  }
  std::sort(panels.begin(), panels.end());
  panels.erase(std::unique(panels.begin(), panels.end()), panels.end());
  rec.panels_on_plans = panels;
  return rec;
}

MethodStats summarize(Method method, const std::vector<RunRecord>& runs) {
  MethodStats st;
  st.method = method;
  std::vector<double> dur;
  std::vector<double> path;
  std::vector<double> con;
  int reached = 0;
  int total = 0;
  for (const auto& r : runs) {
    if (r.method != method) continue;
    dur.push_back(r.duration);
    path.push_back(r.path_length);
    con.push_back(r.contacts);
    reached += r.reached;
    total += static_cast<int>(r.tasks.size());
  }
  st.runs = static_cast<int>(dur.size());
  if (dur.empty()) return st;
  const auto mean = [](const std::vector<double>& x) {
    double acc = 0.0;
    for (double v : x) acc += v;
    return acc / static_cast<double>(x.size());
  };
  st.duration_avg = mean(dur);
  st.duration_std = sample_std(dur, st.duration_avg);
  st.path_avg = mean(path);
  st.path_std = sample_std(path, st.path_avg);
  st.contacts_avg = mean(con);
  st.contacts_std = sample_std(con, st.contacts_avg);
  st.success_rate = total > 0 ? static_cast<double>(reached) / total : 0.0;
  return st;
}

BenchmarkResult run_benchmark(const BenchmarkConfig& config, bool keep_logs) {
  if (config.n_tasks < 1 || config.n_runs < 1) {
    throw Error(ErrorCode::kInvalidArgument, "task and run counts must be at least 1");
  }
  BenchmarkResult out;
  out.tasks = sample_tasks(config.scenario, config.n_tasks, config.seed, config.sampling);
  const std::size_t n_jobs = config.methods.size() * static_cast<std::size_t>(config.n_runs);
  out.runs.resize(n_jobs);
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < n_jobs; k = next++) {
      const Method m = config.methods[k / static_cast<std::size_t>(config.n_runs)];
      const int run = static_cast<int>(k % static_cast<std::size_t>(config.n_runs));
      out.runs[k] = run_tasks(m, config.scenario, out.tasks, config.params,
                              run_seed(config.seed, run), run, keep_logs);
    }
  };
  const int jobs = std::max(1, config.jobs);
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const Method m : config.methods) out.stats.push_back(summarize(m, out.runs));
  return out;
}

void write_runs_csv(const BenchmarkResult& r, std::ostream& out) {
  out << "method,run,duration_s,path_m,contacts,touches,outcome\n";
  out << std::setprecision(10);
  for (const auto& run : r.runs) {
    out << to_string(run.method) << ',' << run.run << ',' << run.duration << ','
        << run.path_length << ',' << run.contacts << ',' << run.touches << ',' << run.outcome()
        << '\n';
  }
}

void write_tasks_csv(const BenchmarkResult& r, std::ostream& out) {
  out << "method,run,task,duration_s,path_m,contacts,touches,outcome\n";
  out << std::setprecision(10);
  for (const auto& run : r.runs) {
    for (const auto& t : run.tasks) {
      out << to_string(run.method) << ',' << run.run << ',' << t.task << ',' << t.duration << ','
          << t.path_length << ',' << t.contacts << ',' << t.touches << ',' << to_string(t.outcome)
          << '\n';
    }
  }
}

void write_summary_csv(const BenchmarkResult& r, std::ostream& out) {
  out << "method,runs,duration_avg_s,duration_std_s,path_avg_m,path_std_m,contacts_avg,"
         "contacts_std,success_rate\n";
  out << std::setprecision(10);
  for (const auto& s : r.stats) {
    out << to_string(s.method) << ',' << s.runs << ',' << s.duration_avg << ',' << s.duration_std
        << ',' << s.path_avg << ',' << s.path_std << ',' << s.contacts_avg << ','
        << s.contacts_std << ',' << s.success_rate << '\n';
  }
}

}  // namespace glassnav
