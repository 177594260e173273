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

// Variable-timing footstep planner: a mixed-integer QP over foothold
// positions, step-initial DCM states, the first-step duration, stride
// slacks, and per-step region assignment binaries, solved by depth-first
// branch-and-bound over convex QP relaxations.

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "stepstone/common.hpp"
#include "stepstone/dcm.hpp"
#include "stepstone/qp.hpp"
#include "stepstone/regions.hpp"

namespace stepstone {

struct PlannerConfig {
  int preview_steps{4};  // N
  double T_nom{0.5};
  double T_min{0.3};
  double T_max{0.7};
  double L_min{-0.6};
  double L_max{0.6};
  double W_min{0.05};
  double W_max{0.5};
  double delta_x{0.04};
  double delta_y{0.04};
  std::vector<double> w_z{};  // per stage k=2..N+1; empty = uniform default
  double w_z_default{10.0};
  double w_sigma{5.0};
  double w_x{1.0};
  double w_y{1.0};
  double M_big{10.0};
  double p_x_nom{0.5};
  double p_y_nom{0.3};
  Vec2 z_goal{10.0, 0.0};  // global goal in the stance frame
  TemplateParams template_params{};
  bool viability_constraints{true};  // lateral corridor, sagittal bound, growth
  bool fix_first_duration{false};    // pin sigma_1 to sigma_nom
  int max_regions{8};
  long node_budget{20000};
  double replan_T_floor{0.05};  // minimum remaining first-step duration

  double lambda() const { return template_params.lambda(); }
  double sigma_nom() const { return std::exp(lambda() * T_nom); }
  double sigma_min() const { return std::exp(lambda() * T_min); }
  double sigma_max() const { return std::exp(lambda() * T_max); }
  double capture_radius() const {
    return sagittal_capture_radius(L_max, T_min, delta_x, template_params);
  }
  double stage_weight(int k) const {  // k = 2 .. N+1
    const int i = k - 2;
    if (i >= 0 && i < static_cast<int>(w_z.size())) return w_z[i];
    return w_z_default;
  }
  void validate() const;
};

struct PlannerProblem {
  PlannerConfig config;
  Vec2 z1{Vec2::Zero()};  // measurement-anchored step-initial DCM
  Vec2 p1{Vec2::Zero()};  // current stance foot (known)
  int ell{1};             // stance sign: 1 right, 0 left
  std::vector<ConvexRegion> regions;
  std::optional<std::vector<int>> fixed_assignment;  // region index per step
  double sigma1_min_override{0.0};  // 0 = none (replan timing floor)

  /// Tracking target for stage z_k, k = 2..N+1: the nominal cadence ahead of
  /// the measured initial DCM, clamped at the goal.
  Vec2 stage_goal(int k) const {
    return Vec2(std::min(z1.x() + (k - 1) * config.p_x_nom, config.z_goal.x()),
                config.z_goal.y());
  }
};

struct SolveStats {
  long nodes{0};
  long qp_iterations{0};
  long wall_time_us{0};
};

struct PlannerSolution {
  QpStatus status{QpStatus::infeasible};
  std::vector<Vec2> footholds;  // p_2 .. p_N
  std::vector<Vec2> dcm;        // z_2 .. z_{N+1}
  double sigma1{0.0};
  double T1{0.0};
  std::vector<int> assignment;  // region index per step k = 1..N
  std::vector<Vec2> slacks;     // (s_x, s_y) per k = 1..N-1
  double objective{0.0};
  SolveStats stats;

  bool feasible() const { return status == QpStatus::optimal; }
};

/// Assembles the planner MIQP as a quadratic model with region-assignment
/// binaries relaxed to [0,1] (or eliminated when fixed_assignment is set).
QuadraticModel build(const PlannerProblem& problem);

/// Branch-and-bound solve to global optimality (or infeasible /
/// node-budget iteration_limit). Ties between equal-objective assignments
/// resolve to the lexicographically smallest one.
PlannerSolution solve(const PlannerProblem& problem);

/// Within-step replanning: anchors z1 to the measured instantaneous DCM
/// back-propagated to the step start and floors the first-step duration at
/// the elapsed time plus the configured remainder.
PlannerSolution replan(const DcmState& state,
                       const std::vector<ConvexRegion>& regions,
                       const PlannerConfig& config, const Vec2& xi_meas);

void write_problem(const PlannerProblem& problem, std::ostream& os);
PlannerProblem read_problem(std::istream& is);
void write_solution(const PlannerSolution& solution, std::ostream& os);
PlannerSolution read_solution(std::istream& is);

}  // namespace stepstone
