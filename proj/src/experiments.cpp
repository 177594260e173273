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

#include "stepstone/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace stepstone {

const char* ablation_name(AblationId id) {
  switch (id) {
    case AblationId::A_full:
      return "A";
    case AblationId::B_fixed_duration:
      return "B";
    case AblationId::C_short_preview:
      return "C";
    case AblationId::D_no_viability:
      return "D";
  }
  return "?";
}

AblationId ablation_from_string(const std::string& name) {
  if (name == "A" || name == "a") return AblationId::A_full;
  if (name == "B" || name == "b") return AblationId::B_fixed_duration;
  if (name == "C" || name == "c") return AblationId::C_short_preview;
  if (name == "D" || name == "d") return AblationId::D_no_viability;
  throw ScenarioError("unknown ablation variant '" + name + "'");
}

void apply_ablation(AblationId id, PlannerConfig& config) {
  switch (id) {
    case AblationId::A_full:
      break;
    case AblationId::B_fixed_duration:
      config.fix_first_duration = true;
      break;
    case AblationId::C_short_preview:
      config.preview_steps = 2;
      break;
    case AblationId::D_no_viability:
      config.viability_constraints = false;
      break;
  }
}

std::uint64_t field_hash(const StoneField& field) {
  // FNV-1a over the quantized stone geometry
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&](std::int64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= static_cast<std::uint64_t>(v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (const auto& stone : field.stones) {
    mix(std::llround(stone.height * 1e9));
    for (const auto& v : stone.polygon.vertices) {
      mix(std::llround(v.x() * 1e9));
      mix(std::llround(v.y() * 1e9));
    }
  }
  return h;
}

RunSummary summarize_run(const std::string& variant, std::uint64_t seed,
                         std::uint64_t hash, const TrajectoryLog& log) {
  RunSummary s;
  s.variant = variant;
  s.seed = seed;
  s.outcome = log.outcome;
  s.steps = static_cast<int>(log.steps.size());
  s.mean_x_velocity = log.mean_x_velocity;
  s.field_hash = hash;
  double sum = 0.0, sum2 = 0.0;
  long lo = std::numeric_limits<long>::max(), hi = 0;
  long n = 0;
  for (const auto& plan : log.plans) {
    sum += static_cast<double>(plan.solve_us);
    sum2 += static_cast<double>(plan.solve_us) * plan.solve_us;
    lo = std::min(lo, plan.solve_us);
    hi = std::max(hi, plan.solve_us);
    ++n;
  }
  if (n > 0) {
    s.solve_count = n;
    s.solve_mean_us = sum / n;
    s.solve_sd_us = std::sqrt(std::max(0.0, sum2 / n - s.solve_mean_us * s.solve_mean_us));
    s.solve_min_us = lo;
    s.solve_max_us = hi;
  }
  return s;
}

namespace {

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::goal_reached:
      return "goal_reached";
    case Outcome::fall:
      return "fall";
    case Outcome::timeout:
      return "timeout";
  }
  return "?";
}

}  // namespace

std::vector<RunSummary> run_ablation(const Scenario& base,
                                     const std::vector<std::uint64_t>& seeds,
                                     const std::vector<AblationId>& variants,
                                     const std::string& out_dir, int threads) {
  if (threads <= 0)
    threads = std::max(1u, std::thread::hardware_concurrency());

  struct Job {
    std::uint64_t seed;
    AblationId variant;
  };
  std::vector<Job> jobs;
  for (const auto seed : seeds)
    for (const auto variant : variants) jobs.push_back({seed, variant});

  std::vector<RunSummary> results(jobs.size());
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      Scenario scenario = base;
      scenario.seed = jobs[i].seed;
      scenario.field.seed = jobs[i].seed;
      apply_ablation(jobs[i].variant, scenario.planner);
      const StoneField field = generate_field(scenario.field);
      const TrajectoryLog log = step_closed_loop(scenario);
      results[i] = summarize_run(ablation_name(jobs[i].variant), jobs[i].seed,
                                 field_hash(field), log);
    }
  };
  std::vector<std::thread> pool;
  for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
  for (auto& th : pool) th.join();

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    std::ofstream csv(out_dir + "/ablation.csv");
    csv << "# template-dynamics walking simulation (kinematic swing, no "
           "full-body physics)\n";
    csv << "variant,seed,outcome,steps,mean_x_velocity,solve_mean_us,"
           "solve_sd_us,solve_min_us,solve_max_us,solve_count,field_hash\n";
    char buf[256];
    for (const auto& r : results) {
      std::snprintf(buf, sizeof(buf), "%s,%llu,%s,%d,%.6g,%.6g,%.6g,%ld,%ld,%ld,%016llx\n",
                    r.variant.c_str(),
                    static_cast<unsigned long long>(r.seed),
                    outcome_name(r.outcome), r.steps, r.mean_x_velocity,
                    r.solve_mean_us, r.solve_sd_us, r.solve_min_us,
                    r.solve_max_us, r.solve_count,
                    static_cast<unsigned long long>(r.field_hash));
      csv << buf;
    }
  }
  return results;
}

PlannerProblem random_problem(std::mt19937_64& rng, int N, int M_max) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  PlannerProblem problem;
  problem.config.preview_steps = N;
  problem.ell = (rng() % 2) ? 1 : 0;
  problem.p1 = Vec2(0.0, problem.ell ? -0.15 : 0.15);
  problem.config.z_goal = Vec2(uni(2.0, 8.0), 0.0);

  auto stone = [&](int id, const Vec2& center, double radius) {
    Polygon ring;
    const int nv = 5 + static_cast<int>(rng() % 4);
    for (int i = 0; i < nv; ++i) {
      const double a = 2.0 * M_PI * i / nv + uni(-0.2, 0.2);
      ring.vertices.push_back(center +
                              radius * uni(0.75, 1.0) *
                                  Vec2(std::cos(a), std::sin(a)));
    }
    ConvexRegion region = to_halfspaces(convex_hull(ring));
    region.id = id;
    return region;
  };

  const int M = std::max(1, 1 + static_cast<int>(rng() % M_max));
  problem.regions.push_back(stone(0, Vec2(0.0, 0.0), uni(0.28, 0.36)));
  for (int j = 1; j < M; ++j) {
    const double x = 0.32 * j + uni(-0.12, 0.12);
    const double y = ((j % 2) ? 0.2 : -0.2) + uni(-0.15, 0.15);
    problem.regions.push_back(stone(j, Vec2(x, y), uni(0.10, 0.16)));
  }

  // initial DCM: inside the sagittal bound, on the inner side laterally
  const double radius = problem.config.capture_radius();
  const double ox = uni(0.02, 0.75 * radius);
  const double oy = problem.config.delta_y + uni(0.005, 0.10);
  const double sign = ((1 + problem.ell) % 2 == 0) ? 1.0 : -1.0;
  problem.z1 = problem.p1 + Vec2(ox, sign * oy);
  return problem;
}

TimingStats run_timing_bench(int instances, int N, int M_max,
                             std::uint64_t seed, const std::string& out_dir) {
  std::mt19937_64 rng(seed);
  std::vector<double> wall_ms;
  std::ofstream csv;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    csv.open(out_dir + "/timing.csv");
    csv << "# template-dynamics planner benchmark (build+solve wall time)\n";
    csv << "instance,status,wall_us,nodes,qp_iterations\n";
  }
  TimingStats stats;
  stats.instances = instances;
  for (int i = 0; i < instances; ++i) {
    const PlannerProblem problem = random_problem(rng, N, M_max);
    const PlannerSolution sol = solve(problem);
    if (csv.is_open()) {
      char buf[128];
      std::snprintf(buf, sizeof(buf), "%d,%d,%ld,%ld,%ld\n", i,
                    static_cast<int>(sol.status), sol.stats.wall_time_us,
                    sol.stats.nodes, sol.stats.qp_iterations);
      csv << buf;
    }
    if (sol.status == QpStatus::optimal)
      wall_ms.push_back(sol.stats.wall_time_us / 1000.0);
  }
  stats.solved = static_cast<int>(wall_ms.size());
  if (!wall_ms.empty()) {
    std::sort(wall_ms.begin(), wall_ms.end());
    stats.min_ms = wall_ms.front();
    stats.max_ms = wall_ms.back();
    stats.median_ms = wall_ms[wall_ms.size() / 2];
    double sum = 0.0, sum2 = 0.0;
    for (double w : wall_ms) {
      sum += w;
      sum2 += w * w;
    }
    stats.mean_ms = sum / wall_ms.size();
    stats.sd_ms =
        std::sqrt(std::max(0.0, sum2 / wall_ms.size() - stats.mean_ms * stats.mean_ms));
  }
  return stats;
}

void emit_plots(const TrajectoryLog& log, const StoneField& field,
                const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const char* preamble =
      "# template-dynamics walking simulation (kinematic swing, no "
      "full-body physics)\n";
  char buf[256];

  {
    std::ofstream os(out_dir + "/plot_stones.csv");
    os << preamble << "stone,vertex,x,y,height\n";
    for (size_t i = 0; i < field.stones.size(); ++i) {
      const auto& stone = field.stones[i];
      for (size_t v = 0; v < stone.polygon.vertices.size(); ++v) {
        std::snprintf(buf, sizeof(buf), "%zu,%zu,%.9g,%.9g,%.9g\n", i, v,
                      stone.polygon.vertices[v].x(),
                      stone.polygon.vertices[v].y(), stone.height);
        os << buf;
      }
    }
  }
  {
    std::ofstream os(out_dir + "/plot_footprints.csv");
    os << preamble << "step,t,side,x,y,T_planned,T_final,fallback\n";
    for (const auto& s : log.steps) {
      std::snprintf(buf, sizeof(buf), "%d,%.9g,%d,%.9g,%.9g,%.9g,%.9g,%d\n",
                    s.index, s.t_touchdown, s.side, s.position.x(),
                    s.position.y(), s.T_planned_at_start, s.T_final,
                    s.fallback ? 1 : 0);
      os << buf;
    }
  }
  {
    std::ofstream os(out_dir + "/plot_traces.csv");
    os << preamble << "t,comx,comy,xix,xiy,px,py\n";
    for (const auto& r : log.ticks) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n",
                    r.t, r.com.x(), r.com.y(), r.xi_world.x(),
                    r.xi_world.y(), r.p_world.x(), r.p_world.y());
      os << buf;
    }
  }
  {
    std::ofstream os(out_dir + "/plot_velocity.csv");
    os << preamble << "t,vx,vy\n";
    for (const auto& r : log.ticks) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g\n", r.t, r.com_vel.x(),
                    r.com_vel.y());
      os << buf;
    }
  }
  {
    std::ofstream os(out_dir + "/plot_durations.csv");
    os << preamble << "t,t_in_step,T_current,phase\n";
    for (const auto& r : log.ticks) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", r.t,
                    r.phase * r.T_current, r.T_current, r.phase);
      os << buf;
    }
  }
}

}  // namespace stepstone
