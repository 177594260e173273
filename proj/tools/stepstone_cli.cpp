// Copyright 2026 The Stepstone Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line harness: single plans, closed-loop episodes, point-cloud
// replays, the four-way ablation, and the planner timing benchmark.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "stepstone/experiments.hpp"
#include "stepstone/heightmap.hpp"
#include "stepstone/miqp.hpp"
#include "stepstone/regions.hpp"
#include "stepstone/sim.hpp"
#include "stepstone/solution_check.hpp"

namespace fs = std::filesystem;
using namespace stepstone;

namespace {

Scenario scenario_from_file(const std::string& path, std::uint64_t seed_override,
                            bool has_seed) {
  Scenario scenario = Scenario::defaults();
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw ScenarioError("cannot open scenario file: " + path);
    scenario = load_scenario(is);
  }
  if (has_seed) {
    scenario.seed = seed_override;
    scenario.field.seed = seed_override;
  }
  return scenario;
}

int run_plan(const std::string& problem_path, const std::string& out_dir) {
  std::ifstream is(problem_path);
  if (!is) throw ScenarioError("cannot open problem file: " + problem_path);
  const PlannerProblem problem = read_problem(is);
  const PlannerSolution solution = solve(problem);

  std::ostringstream text;
  write_solution(solution, text);
  std::cout << text.str();
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream os(out_dir + "/solution.txt");
    os << text.str();
  }
  if (solution.feasible()) {
    const CheckReport report = check_solution(problem, solution);
    if (!report.ok())
      throw InternalError("solution failed the independent constraint check: " +
                          report.summary());
    std::cout << "# check: " << report.summary() << "\n";
  }
  return 0;
}

int run_simulate(const Scenario& scenario, const std::string& out_dir) {
  const TrajectoryLog log = step_closed_loop(scenario);
  const char* outcome = log.outcome == Outcome::goal_reached ? "goal_reached"
                        : log.outcome == Outcome::fall       ? "fall"
                                                             : "timeout";
  std::cout << "outcome " << outcome << "\n";
  std::cout << "steps " << log.steps.size() << "\n";
  std::cout << "duration " << log.duration << "\n";
  std::cout << "mean_x_velocity " << log.mean_x_velocity << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream csv(out_dir + "/trajectory.csv");
    log.write_csv(csv);
    std::ofstream sc(out_dir + "/scenario.txt");
    save_scenario(scenario, sc);
    emit_plots(log, generate_field(scenario.field), out_dir);
  }
  return 0;
}

int run_perceive(const std::string& cloud_path, const Scenario& scenario,
                 const std::string& out_dir) {
  std::ifstream is(cloud_path);
  if (!is) throw ScenarioError("cannot open replay file: " + cloud_path);
  const std::vector<PointCloud> frames = load_cloud_replay(is);

  HeightMap map(scenario.perception);
  StancePose pose;  // static replay
  for (const auto& frame : frames)
    update(map, {frame}, pose, scenario.sensor_model, scenario.perception);

  std::ostringstream dump;
  dump_heightmap(map, dump);
  std::cout << "frames " << frames.size() << "\n";
  std::cout << "observed_cells " << map.observed_count() << "\n";
  const std::vector<ConvexRegion> regions =
      extract_regions(map, scenario.regions);
  std::cout << "regions " << regions.size() << "\n";
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    std::ofstream grid(out_dir + "/heightmap.txt");
    grid << dump.str();
    std::ofstream rs(out_dir + "/regions.txt");
    write_regions(regions, rs);
  } else {
    std::cout << dump.str();
  }
  return 0;
}

int run_ablate(const Scenario& base, int n_seeds, const std::string& variants,
               const std::string& out_dir) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(base.seed + i);
  std::vector<AblationId> ids;
  for (char c : variants) {
    if (c == ',') continue;
    ids.push_back(ablation_from_string(std::string(1, c)));
  }
  const std::vector<RunSummary> results =
      run_ablation(base, seeds, ids, out_dir);

  std::cout << "variant,success_rate,falls,timeouts,mean_vx\n";
  for (const auto id : ids) {
    const std::string name = ablation_name(id);
    int ok = 0, falls = 0, timeouts = 0, n = 0;
    double vx = 0.0;
    for (const auto& r : results) {
      if (r.variant != name) continue;
      ++n;
      if (r.outcome == Outcome::goal_reached) ++ok;
      if (r.outcome == Outcome::fall) ++falls;
      if (r.outcome == Outcome::timeout) ++timeouts;
      vx += r.mean_x_velocity;
    }
    std::printf("%s,%.3f,%d,%d,%.3f\n", name.c_str(),
                n ? static_cast<double>(ok) / n : 0.0, falls, timeouts,
                n ? vx / n : 0.0);
  }
  return 0;
}

int run_bench(int instances, int N, int M, std::uint64_t seed,
              const std::string& out_dir) {
  const TimingStats stats = run_timing_bench(instances, N, M, seed, out_dir);
  std::printf("instances %d solved %d\n", stats.instances, stats.solved);
  std::printf("mean %.2f ms (SD = %.2f ms), median %.2f ms\n", stats.mean_ms,
              stats.sd_ms, stats.median_ms);
  std::printf("range [%.1f, %.1f] ms\n", stats.min_ms, stats.max_ms);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stepstone: perceptive variable-timing footstep planning on "
               "disconnected footholds"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  bool has_seed = false;
  app.add_option("--config", config_path, "scenario/config file")
      ->each([](const std::string&) {});
  app.add_option("--out-dir", out_dir, "output directory");
  auto* seed_opt = app.add_option("--seed", seed, "base RNG seed");

  auto* plan = app.add_subcommand("plan", "solve one planner problem file");
  std::string problem_path;
  plan->add_option("problem", problem_path, "problem file")->required();

  auto* simulate =
      app.add_subcommand("simulate", "run one closed-loop episode");

  auto* perceive = app.add_subcommand(
      "perceive", "replay a point-cloud file into a heightmap");
  std::string cloud_path;
  perceive->add_option("clouds", cloud_path, "replay file")->required();

  auto* ablate = app.add_subcommand("ablate", "four-way ablation sweep");
  int n_seeds = 10;
  std::string variant = "A,B,C,D";
  ablate->add_option("--seeds", n_seeds, "number of seeds");
  ablate->add_option("--variant", variant, "comma-joined variant letters");

  auto* bench = app.add_subcommand("bench", "planner timing benchmark");
  int instances = 100, bench_N = 4, bench_M = 8;
  bench->add_option("--instances", instances, "number of instances");
  bench->add_option("--N", bench_N, "preview steps");
  bench->add_option("--M", bench_M, "max regions");

  try {
    app.parse(argc, argv);
    has_seed = seed_opt->count() > 0;
    const Scenario scenario =
        scenario_from_file(config_path, seed, has_seed);
    if (*plan) return run_plan(problem_path, out_dir);
    if (*simulate) return run_simulate(scenario, out_dir);
    if (*perceive) return run_perceive(cloud_path, scenario, out_dir);
    if (*ablate) return run_ablate(scenario, n_seeds, variant, out_dir);
    if (*bench) return run_bench(instances, bench_N, bench_M,
                                 has_seed ? seed : 20260810ull, out_dir);
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
}
