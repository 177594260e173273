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

#include "stepstone/solution_check.hpp"

#include <cmath>
#include <sstream>

namespace stepstone {

double CheckReport::max_violation() const {
  double m = 0.0;
  for (const auto& v : violations) m = std::max(m, v.magnitude);
  return m;
}

std::string CheckReport::summary() const {
  std::ostringstream os;
  if (ok()) {
    os << "all constraint groups satisfied";
  } else {
    os << violations.size() << " violation(s):";
    for (const auto& v : violations)
      os << ' ' << v.group << "[k=" << v.step << "]=" << v.magnitude;
  }
  return os.str();
}

CheckReport check_solution(const PlannerProblem& problem,
                           const PlannerSolution& solution, double tol,
                           double objective_tol) {
  CheckReport report;
  auto flag = [&](const std::string& group, int step, double magnitude) {
    if (magnitude > tol) report.violations.push_back({group, step, magnitude});
  };

  const PlannerConfig& cfg = problem.config;
  const int N = cfg.preview_steps;
  const double lambda =
      std::sqrt(cfg.template_params.gravity / cfg.template_params.com_height);
  const double sigma_nom = std::exp(lambda * cfg.T_nom);
  const double sigma_min = std::exp(lambda * cfg.T_min);
  const double sigma_max = std::exp(lambda * cfg.T_max);

  if (static_cast<int>(solution.footholds.size()) != N - 1 ||
      static_cast<int>(solution.dcm.size()) != N ||
      static_cast<int>(solution.assignment.size()) != N ||
      static_cast<int>(solution.slacks.size()) != N - 1) {
    report.violations.push_back({"shape", 0, 1.0});
    return report;
  }

  // assemble the full sequences p_1..p_N and z_1..z_{N+1}
  std::vector<Vec2> p(N + 1), z(N + 2);
  p[1] = problem.p1;
  for (int k = 2; k <= N; ++k) p[k] = solution.footholds[k - 2];
  z[1] = problem.z1;
  for (int k = 2; k <= N + 1; ++k) z[k] = solution.dcm[k - 2];

  // dynamics: z_{k+1} = sigma_k z_k + (1 - sigma_k) p_k, sigma_1 decided,
  // sigma_k = sigma_nom afterwards
  for (int k = 1; k <= N; ++k) {
    const double sig = (k == 1) ? solution.sigma1 : sigma_nom;
    const Vec2 expected = sig * z[k] + (1.0 - sig) * p[k];
    flag("dynamics", k, (z[k + 1] - expected).cwiseAbs().maxCoeff());
  }

  // sigma bounds (plus the replan floor when present)
  double lo = sigma_min;
  if (problem.sigma1_min_override > 0.0)
    lo = std::max(lo, problem.sigma1_min_override);
  if (cfg.fix_first_duration) {
    flag("sigma_fixed", 1, std::abs(solution.sigma1 - sigma_nom));
  } else {
    flag("sigma_lower", 1, lo - solution.sigma1);
    flag("sigma_upper", 1, solution.sigma1 - sigma_max);
  }

  // region assignment: exactly one region per step, membership of the
  // selected region
  const int M = static_cast<int>(problem.regions.size());
  for (int k = 1; k <= N; ++k) {
    const int j = solution.assignment[k - 1];
    if (j < 0 || j >= M) {
      report.violations.push_back({"assignment_range", k, 1.0});
      continue;
    }
    const ConvexRegion& region = problem.regions[j];
    double worst = 0.0;
    for (int e = 0; e < region.edges(); ++e) {
      const double lhs =
          region.A(e, 0) * p[k].x() + region.A(e, 1) * p[k].y() - region.b(e);
      worst = std::max(worst, lhs);
    }
    flag("membership", k, worst);
  }

  if (cfg.viability_constraints) {
    // lateral corridor with the per-step sign flip
    for (int k = 1; k <= N; ++k) {
      const double sign = ((k + problem.ell) % 2 == 0) ? 1.0 : -1.0;
      flag("lateral", k, cfg.delta_y - sign * (z[k].y() - p[k].y()));
    }
    // sagittal infinite-step bound, radius recomputed here from T_min
    const double radius = cfg.L_max / (sigma_min - 1.0) - cfg.delta_x;
    for (int k = 1; k <= N; ++k)
      flag("sagittal", k, std::abs(z[k].x() - p[k].x()) - radius);
    // step-to-step growth
    for (int k = 1; k <= N - 1; ++k)
      flag("growth", k, z[k + 1].x() - z[k].x() - cfg.L_max);
  }

  // stride slacks: definition consistency and boxes
  for (int k = 1; k <= N - 1; ++k) {
    const double sign = ((k + problem.ell) % 2 == 0) ? 1.0 : -1.0;
    const double sx = p[k + 1].x() - p[k].x();
    const double sy = sign * (p[k + 1].y() - p[k].y());
    flag("slack_def_x", k, std::abs(solution.slacks[k - 1].x() - sx));
    flag("slack_def_y", k, std::abs(solution.slacks[k - 1].y() - sy));
    flag("stride_lower", k, cfg.L_min - sx);
    flag("stride_upper", k, sx - cfg.L_max);
    flag("width_lower", k, cfg.W_min - sy);
    flag("width_upper", k, sy - cfg.W_max);
  }

  // objective decomposition: tracking + timing + stride regularization
  double obj = 0.0;
  for (int k = 2; k <= N + 1; ++k) {
    const Vec2 goal = problem.stage_goal(k);
    obj += cfg.stage_weight(k) * (z[k] - goal).squaredNorm();
  }
  obj += cfg.w_sigma * (solution.sigma1 - sigma_nom) * (solution.sigma1 - sigma_nom);
  for (int k = 1; k <= N - 1; ++k) {
    obj += cfg.w_x * std::pow(solution.slacks[k - 1].x() - cfg.p_x_nom, 2);
    obj += cfg.w_y * std::pow(solution.slacks[k - 1].y() - cfg.p_y_nom, 2);
  }
  report.objective_recomputed = obj;
  if (std::abs(obj - solution.objective) > objective_tol)
    report.violations.push_back(
        {"objective", 0, std::abs(obj - solution.objective)});

  return report;
}

}  // namespace stepstone
