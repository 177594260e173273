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

// Experiment harness: four-way ablation sweeps on seed-pinned fields,
// planner timing benchmarks on randomized instances, and plot-ready CSV
// emission from trajectory logs.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stepstone/miqp.hpp"
#include "stepstone/sim.hpp"

namespace stepstone {

enum class AblationId { A_full, B_fixed_duration, C_short_preview, D_no_viability };

const char* ablation_name(AblationId id);
AblationId ablation_from_string(const std::string& name);
/// Applies the variant's planner overrides (A is the identity).
void apply_ablation(AblationId id, PlannerConfig& config);

struct RunSummary {
  std::string variant;
  std::uint64_t seed{0};
  Outcome outcome{Outcome::timeout};
  int steps{0};
  double mean_x_velocity{0.0};
  double solve_mean_us{0.0};
  double solve_sd_us{0.0};
  long solve_min_us{0};
  long solve_max_us{0};
  long solve_count{0};
  std::uint64_t field_hash{0};
};

RunSummary summarize_run(const std::string& variant, std::uint64_t seed,
                         std::uint64_t field_hash, const TrajectoryLog& log);

/// Seed-pinned fields hashed for cross-variant identity checks.
std::uint64_t field_hash(const StoneField& field);

/// Runs every (seed, variant) episode on identical fields. Writes
/// ablation.csv under out_dir when non-empty. Parallel across seeds.
std::vector<RunSummary> run_ablation(const Scenario& base,
                                     const std::vector<std::uint64_t>& seeds,
                                     const std::vector<AblationId>& variants,
                                     const std::string& out_dir,
                                     int threads = 0);

struct TimingStats {
  int instances{0};
  int solved{0};
  double mean_ms{0.0};
  double sd_ms{0.0};
  double median_ms{0.0};
  double min_ms{0.0};
  double max_ms{0.0};
};

/// Randomized planner instances at the given scale; solves them and
/// reports build+solve wall-time statistics. Writes timing.csv under
/// out_dir when non-empty.
TimingStats run_timing_bench(int instances, int N, int M_max,
                             std::uint64_t seed, const std::string& out_dir);

/// Random reachable stepping-stone instance (stance stone at the origin,
/// candidate stones ahead). Shared by the bench and the acceptance suite.
PlannerProblem random_problem(std::mt19937_64& rng, int N, int M_max);

/// Footprint overlay, CoM/DCM traces, velocity panel, and step-duration
/// panel data as CSV files under out_dir.
void emit_plots(const TrajectoryLog& log, const StoneField& field,
                const std::string& out_dir);

}  // namespace stepstone
