#pragma once

// Repeated randomized point-to-point tasks for each navigation method.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "glassnav/navigator.hpp"

namespace glassnav {

struct Task {
  Vec3 start{Vec3::Zero()};
  Vec3 goal{Vec3::Zero()};
};

struct TaskSampling {
  /// Minimum distance of sampled points from obstacles, panels and bounds.
  double clearance{0.6};
  double min_separation{4.0};
  double z_min{0.9};
  double z_max{1.8};
  int max_rejections{10000};
};

/// Chain of n tasks whose goals are the next task's start. Every straight
/// start-goal segment crosses an obstacle or a panel. Deterministic per seed.
/// Throws Error{kSamplingExhausted}.
std::vector<Task> sample_tasks(const Scenario& scenario, int n, std::uint64_t seed,
                               const TaskSampling& opts = {});

/// Whether the straight segment hits an opaque box or crosses a panel.
bool segment_blocked(const Scenario& scenario, const Vec3& a, const Vec3& b);

struct BenchmarkConfig {
  Scenario scenario;
  int n_tasks{10};
  int n_runs{5};
  std::uint64_t seed{1};
  std::vector<Method> methods{Method::kActive, Method::kNoncontact, Method::kContactBased};
  int jobs{1};
  NavParams params;
  TaskSampling sampling;
};

struct TaskRecord {
  int task{0};
  Outcome outcome{Outcome::kInfeasible};
  double duration{0.0};
  double path_length{0.0};
  int contacts{0};
  int touches{0};
};

struct RunRecord {
  Method method{Method::kActive};
  int run{0};
  double duration{0.0};
  double path_length{0.0};
  int contacts{0};
  int touches{0};
  int reached{0};
  bool crashed{false};
  /// True panels crossed by any trajectory planned during the run.
  std::vector<int> panels_on_plans;
  std::vector<TaskRecord> tasks;
  std::vector<LogEntry> log;

  std::string outcome() const;
};

struct MethodStats {
  Method method{Method::kActive};
  int runs{0};
  double duration_avg{0.0};
  double duration_std{0.0};
  double path_avg{0.0};
  double path_std{0.0};
  double contacts_avg{0.0};
  double contacts_std{0.0};
  double success_rate{0.0};
};

struct BenchmarkResult {
  std::vector<Task> tasks;
  std::vector<RunRecord> runs;  // method-major, then run index
  std::vector<MethodStats> stats;

  const MethodStats& stats_for(Method m) const;
};

/// Seed of one run, derived from the master seed.
std::uint64_t run_seed(std::uint64_t master, int run);

/// One run: all tasks in order with shared map knowledge.
RunRecord run_tasks(Method method, const Scenario& scenario, const std::vector<Task>& tasks,
                    const NavParams& params, std::uint64_t seed, int run_index,
                    bool keep_log = false);

/// Executes every (method, run) pair on `jobs` workers. Output does not
/// depend on the number of workers.
BenchmarkResult run_benchmark(const BenchmarkConfig& config, bool keep_logs = false);

MethodStats summarize(Method method, const std::vector<RunRecord>& runs);

void write_runs_csv(const BenchmarkResult& r, std::ostream& out);
void write_tasks_csv(const BenchmarkResult& r, std::ostream& out);
void write_summary_csv(const BenchmarkResult& r, std::ostream& out);

}  // namespace glassnav
