#include <doctest.h>

#include <cmath>
#include <sstream>

#include "glassnav/benchmark.hpp"
#include "glassnav/error.hpp"

using namespace glassnav;

namespace {

Scenario scenario_file(const std::string& name) {
  return load_scenario(std::string(GLASSNAV_SCENARIO_DIR) + "/" + name + ".json");
}

BenchmarkConfig small_config() {
  BenchmarkConfig c;
  c.scenario = scenario_file("double_opening");
  c.n_tasks = 2;
  c.n_runs = 2;
  c.seed = 11;
  c.methods = {Method::kActive, Method::kNoncontact};
  return c;
}

std::string all_csv(const BenchmarkResult& r) {
  std::ostringstream out;
  write_runs_csv(r, out);
  write_tasks_csv(r, out);
  write_summary_csv(r, out);
  return out.str();
}

}  // namespace

TEST_CASE("sample_tasks: deterministic chain of blocked segments") {
  const auto s = scenario_file("reference");
  const auto a = sample_tasks(s, 10, 42);
  const auto b = sample_tasks(s, 10, 42);
  REQUIRE(a.size() == 10);
  REQUIRE(b.size() == 10);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].start == b[i].start);
    CHECK(a[i].goal == b[i].goal);
    if (i > 0) CHECK(a[i].start == a[i - 1].goal);
    CHECK(segment_blocked(s, a[i].start, a[i].goal));
    CHECK((a[i].goal - a[i].start).norm() >= 4.0);
    CHECK(s.bounds.contains(a[i].goal));
    CHECK(a[i].goal.z() >= 0.9);
    CHECK(a[i].goal.z() <= 1.8);
  }
  const auto c = sample_tasks(s, 10, 43);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].goal != c[i].goal;
  CHECK(differs);
}

TEST_CASE("sample_tasks: open space exhausts the sampler") {
  Scenario s;
  s.bounds = {{0, 0, 0}, {10, 10, 3}};
  s.start.position = {1, 1, 1};
  s.goal = {9, 9, 1};
  s.finalize();
  TaskSampling opts;
  opts.max_rejections = 500;
  try {
    sample_tasks(s, 3, 1, opts);
    FAIL("expected SamplingExhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSamplingExhausted);
  }
  try {
    sample_tasks(s, 0, 1, opts);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("segment_blocked: walls and panels block, open air does not") {
  const auto s = scenario_file("double_opening");
  CHECK(segment_blocked(s, {1, -3, 1.2}, {9, -3, 1.2}));   // wall
  CHECK(segment_blocked(s, {1, -0.8, 1.2}, {9, -0.8, 1.2}));  // true panel
  CHECK(segment_blocked(s, {1, 0.8, 1.2}, {9, 0.8, 1.2}));  // phantom panel
  CHECK_FALSE(segment_blocked(s, {1, -3, 1.2}, {4, 3, 1.2}));
}

TEST_CASE("run_seed: distinct per run and stable") {
  CHECK(run_seed(1, 0) == run_seed(1, 0));
  CHECK(run_seed(1, 0) != run_seed(1, 1));
  CHECK(run_seed(1, 0) != run_seed(2, 0));
}

TEST_CASE("summarize: sample statistics of run records") {
  std::vector<RunRecord> runs(3);
  const double d[3] = {10, 12, 14};
  for (int i = 0; i < 3; ++i) {
    runs[i].method = Method::kActive;
    runs[i].duration = d[i];
    runs[i].path_length = 2 * d[i];
    runs[i].contacts = i;
    runs[i].tasks.resize(2);
    runs[i].reached = i == 0 ? 1 : 2;
  }
  RunRecord other;
  other.method = Method::kNoncontact;
  other.duration = 1000;
  runs.push_back(other);
  const auto st = summarize(Method::kActive, runs);
  CHECK(st.runs == 3);
  CHECK(st.duration_avg == doctest::Approx(12.0));
  CHECK(st.duration_std == doctest::Approx(2.0));
  CHECK(st.path_avg == doctest::Approx(24.0));
  CHECK(st.path_std == doctest::Approx(4.0));
  CHECK(st.contacts_avg == doctest::Approx(1.0));
  CHECK(st.contacts_std == doctest::Approx(1.0));
  CHECK(st.success_rate == doctest::Approx(5.0 / 6.0));
}

TEST_CASE("run_benchmark: reproducible and independent of worker count") {
  auto cfg = small_config();
  const auto a = run_benchmark(cfg);
  const auto b = run_benchmark(cfg);
  cfg.jobs = 2;
  const auto c = run_benchmark(cfg);
  REQUIRE(a.runs.size() == 4);
  CHECK(all_csv(a) == all_csv(b));
  CHECK(all_csv(a) == all_csv(c));
  CHECK(a.runs[0].method == Method::kActive);
  CHECK(a.runs[2].method == Method::kNoncontact);
  CHECK(a.runs[3].run == 1);
  CHECK(a.stats_for(Method::kNoncontact).contacts_avg == 0.0);
  for (const auto& r : a.runs) CHECK_FALSE(r.crashed);
  try {
    a.stats_for(Method::kContactBased);
    FAIL("expected InvalidArgument");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidArgument);
  }
}

TEST_CASE("write_summary_csv: header and one row per method") {
  BenchmarkResult r;
  r.stats.push_back({});
  r.stats.back().method = Method::kNoncontact;
  r.stats.back().runs = 5;
  std::ostringstream out;
  write_summary_csv(r, out);
  std::istringstream in(out.str());
  std::string header;
  std::string row;
  std::getline(in, header);
  std::getline(in, row);
  CHECK(header ==
        "method,runs,duration_avg_s,duration_std_s,path_avg_m,path_std_m,contacts_avg,"
        "contacts_std,success_rate");
  CHECK(row.rfind("noncontact,5,", 0) == 0);
}
