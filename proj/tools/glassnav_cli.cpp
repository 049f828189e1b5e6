#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "glassnav/benchmark.hpp"
#include "glassnav/error.hpp"
#include "glassnav/navigator.hpp"

namespace fs = std::filesystem;
using namespace glassnav;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitScenario = 1;
constexpr int kExitCrash = 2;
constexpr int kExitUsage = 64;

struct Overrides {
  NavParams params;
  double dt{0.02};
};

void add_param_flags(CLI::App* cmd, Overrides& o) {
  auto& p = o.params;
  cmd->add_option("--tau-s", p.perception.tau_s, "mask confidence threshold, [0,1]")
      ->capture_default_str();
  cmd->add_option("--tau-n", p.perception.tau_n, "normal angle gate for fusion, rad")
      ->capture_default_str();
  cmd->add_option("--tau-c", p.perception.tau_c, "centroid distance gate for fusion, m")
      ->capture_default_str();
  cmd->add_option("--tau-i", p.perception.tau_i, "IoU gate for fusion, [0,1]")
      ->capture_default_str();
  cmd->add_option("--delta-s", p.touch.delta_s, "ready distance in front of a surface, m")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--delta-e", p.touch.delta_e, "approach end distance behind a surface, m")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--v-touch", p.touch.v_touch, "touch approach speed, m/s")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_option("--dt", o.dt, "simulation tick, s")->capture_default_str()->check(
      CLI::PositiveNumber);
}

NavParams finish(Overrides& o) {
  o.params.perception.validate();
  o.params.session.dt = o.dt;
  o.params.planner.dt = o.dt;
  return o.params;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Glass-aware navigation simulator and benchmark"};
  app.require_subcommand(1);

  Overrides run_o;
  std::string run_scenario;
  std::string run_method = "active";
  std::uint64_t run_seed = 1;
  std::string run_out;
  bool run_svg = false;
  bool run_grid = false;
  auto* run = app.add_subcommand("run", "run one navigation and print the result as JSON");
  run->add_option("--scenario", run_scenario, "scenario JSON file")->required();
  run->add_option("--method", run_method, "active, noncontact or contact_based")
      ->capture_default_str()
      ->check(CLI::IsMember({"active", "noncontact", "contact_based"}));
  run->add_option("--seed", run_seed, "random seed")->capture_default_str();
  run->add_option("--out", run_out, "output directory for log.ndjson and plots");
  run->add_flag("--emit-svg", run_svg, "write run.svg to the output directory");
  run->add_flag("--emit-grid", run_grid, "write grid.json and grid.svg to the output directory");
  add_param_flags(run, run_o);

  Overrides bench_o;
  std::string bench_scenario;
  int tasks = 10;
  int runs = 5;
  std::uint64_t bench_seed = 1;
  int jobs = 1;
  std::string bench_out;
  std::vector<std::string> methods{"active", "noncontact", "contact_based"};
  bool bench_svg = false;
  auto* bench = app.add_subcommand("bench", "run every method over sampled tasks and write CSVs");
  bench->add_option("--scenario", bench_scenario, "scenario JSON file")->required();
  bench->add_option("--tasks", tasks, "tasks per run")->capture_default_str()->check(
      CLI::PositiveNumber);
  bench->add_option("--runs", runs, "runs per method")->capture_default_str()->check(
      CLI::PositiveNumber);
  bench->add_option("--seed", bench_seed, "master seed")->capture_default_str();
  bench->add_option("--jobs", jobs, "worker threads")->capture_default_str()->check(
      CLI::PositiveNumber);
  bench->add_option("--methods", methods, "methods to run")
      ->capture_default_str()
      ->check(CLI::IsMember({"active", "noncontact", "contact_based"}));
  bench->add_option("--out", bench_out,
                    "output directory for runs.csv, tasks.csv and summary.csv; summary goes to "
                    "stdout when omitted");
  bench->add_flag("--emit-svg", bench_svg, "write one SVG per run to the output directory");
  add_param_flags(bench, bench_o);

  std::string plot_scenario;
  std::string plot_log;
  std::string plot_out;
  auto* plot = app.add_subcommand("plot", "render a trajectory log as an overhead SVG");
  plot->add_option("--scenario", plot_scenario, "scenario JSON file")->required();
  plot->add_option("--log", plot_log, "trajectory log, newline-delimited JSON")
      ->required()
      ->check(CLI::ExistingFile);
  plot->add_option("--out", plot_out, "SVG file; stdout when omitted");

  std::string validate_scenario;
  auto* validate = app.add_subcommand("validate", "check a scenario file for problems");
  validate->add_option("--scenario", validate_scenario, "scenario JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  Scenario scenario;
  try {
    if (*run) scenario = load_scenario(run_scenario);
    if (*bench) scenario = load_scenario(bench_scenario);
    if (*plot) scenario = load_scenario(plot_scenario);
    if (*validate) scenario = load_scenario(validate_scenario);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kExitScenario;
  }

  try {
    if (*validate) {
      const auto issues = scenario.lint();
      for (const auto& s : issues) std::cout << s << '\n';
      if (!issues.empty()) return kExitScenario;
      std::cout << "ok\n";
      return kExitOk;
    }

    if (*plot) {
      std::ifstream in(plot_log);
      const auto log = read_log_ndjson(in);
      if (plot_out.empty()) {
        write_run_svg(scenario, log, nullptr, std::cout);
      } else {
        auto out = open_out(plot_out);
        write_run_svg(scenario, log, nullptr, out);
      }
      return kExitOk;
    }

    if (*run) {
      const NavParams params = finish(run_o);
      World world = World::for_scenario(scenario, params.perception, params.grid_resolution,
                                        params.robot_radius);
      const auto r = navigate(method_from_string(run_method), scenario, params, run_seed, &world);
      std::cout << to_json(r).dump(2) << '\n';
      if (!run_out.empty()) {
        fs::create_directories(run_out);
        auto log = open_out(fs::path(run_out) / "log.ndjson");
        write_log_ndjson(r.log, log);
        if (run_svg) {
          auto svg = open_out(fs::path(run_out) / "run.svg");
          write_run_svg(scenario, r.log, &world.registry, svg);
        }
        if (run_grid) {
          auto grid = open_out(fs::path(run_out) / "grid.json");
          export_grid(world.grid, grid);
          auto svg = open_out(fs::path(run_out) / "grid.svg");
          write_grid_svg(world.grid, 0.5, 2.0, svg);
        }
      } else if (run_svg || run_grid) {
        std::cerr << "--emit-svg and --emit-grid need --out\n";
        return kExitUsage;
      }
      return r.outcome == Outcome::kCrashed ? kExitCrash : kExitOk;
    }

    BenchmarkConfig cfg;
    cfg.scenario = scenario;
    cfg.n_tasks = tasks;
    cfg.n_runs = runs;
    cfg.seed = bench_seed;
    cfg.jobs = jobs;
    cfg.methods.clear();
    for (const auto& m : methods) cfg.methods.push_back(method_from_string(m));
    cfg.params = finish(bench_o);
    if (bench_svg && bench_out.empty()) {
      std::cerr << "--emit-svg needs --out\n";
      return kExitUsage;
    }
    const auto result = run_benchmark(cfg, bench_svg);
    if (bench_out.empty()) {
      write_summary_csv(result, std::cout);
    } else {
      fs::create_directories(bench_out);
      auto runs_csv = open_out(fs::path(bench_out) / "runs.csv");
      write_runs_csv(result, runs_csv);
      auto tasks_csv = open_out(fs::path(bench_out) / "tasks.csv");
      write_tasks_csv(result, tasks_csv);
      auto summary = open_out(fs::path(bench_out) / "summary.csv");
      write_summary_csv(result, summary);
      if (bench_svg) {
        for (const auto& r : result.runs) {
          auto svg = open_out(fs::path(bench_out) /
                              (to_string(r.method) + "_run" + std::to_string(r.run) + ".svg"));
          write_run_svg(scenario, r.log, nullptr, svg);
        }
      }
    }
    for (const auto& r : result.runs) {
      if (r.crashed) return kExitCrash;
    }
    return kExitOk;
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return e.code() == ErrorCode::kScenario || e.code() == ErrorCode::kSamplingExhausted
               ? kExitScenario
               : kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return kExitScenario;
  }
}
