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

#include "stepstone/miqp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <tuple>

namespace stepstone {

namespace {

constexpr double kTieTol = 1e-9;
constexpr double kIntTol = 1e-6;

// Variable layout. Step indices k are 1-based as in the planner recursion;
// region index j is 0-based.
struct Layout {
  int N{0};
  int M{0};
  int p(int k, int axis) const { return 2 * (k - 1) + axis; }
  int z(int k, int axis) const { return 2 * N + 2 * (k - 1) + axis; }
  int sigma1() const { return 4 * N + 2; }
  int s(int k, int axis) const { return 4 * N + 3 + 2 * (k - 1) + axis; }
  int delta(int k, int j) const { return 6 * N + 1 + (k - 1) * M + j; }
  int total(bool with_binaries) const {
    return 6 * N + 1 + (with_binaries ? N * M : 0);
  }
};

double lateral_sign(int k, int ell) {
  return ((k + ell) % 2 == 0) ? 1.0 : -1.0;
}

// Region decisions carried through the branch-and-bound tree. assigned[k-1]
// is the region index forced at step k (-1 while free); forbidden marks
// excluded (step, region) pairs.
struct DeltaState {
  std::vector<int> assigned;
  std::vector<std::vector<char>> forbidden;
  bool impossible{false};

  int candidate_count(int k, int M) const {
    if (assigned[k - 1] >= 0) return 1;
    int n = 0;
    for (int j = 0; j < M; ++j)
      if (!forbidden[k - 1][j]) ++n;
    return n;
  }
  void forbid(int k, int j, int M) {
    forbidden[k - 1][j] = 1;
    if (assigned[k - 1] >= 0) return;
    int last = -1, n = 0;
    for (int jj = 0; jj < M; ++jj) {
      if (!forbidden[k - 1][jj]) {
        ++n;
        last = jj;
      }
    }
    if (n == 1) assigned[k - 1] = last;
    if (n == 0) impossible = true;
  }
};

DeltaState make_root_state(const PlannerProblem& problem, bool reach_presolve) {
  const int N = problem.config.preview_steps;
  const int M = static_cast<int>(problem.regions.size());
  DeltaState state;
  state.assigned.assign(N, -1);
  state.forbidden.assign(N, std::vector<char>(M, 0));

  // the stance foothold is data: only regions containing it are admissible
  for (int j = 0; j < M; ++j)
    if (!problem.regions[j].contains(problem.p1, 1e-9))
      state.forbid(1, j, M);

  if (reach_presolve) {
    // stride boxes bound how far p_k can sit from p1; regions with no
    // bounding-box overlap of the reachable set can never be selected
    const PlannerConfig& cfg = problem.config;
    for (int k = 2; k <= N && !state.impossible; ++k) {
      const double steps = static_cast<double>(k - 1);
      const double x_lo = problem.p1.x() + steps * cfg.L_min - 1e-6;
      const double x_hi = problem.p1.x() + steps * cfg.L_max + 1e-6;
      const double y_rad = steps * cfg.W_max + 1e-6;
      for (int j = 0; j < M; ++j) {
        double bx_lo = 1e30, bx_hi = -1e30, by_lo = 1e30, by_hi = -1e30;
        for (const auto& v : problem.regions[j].vertices.vertices) {
          bx_lo = std::min(bx_lo, v.x());
          bx_hi = std::max(bx_hi, v.x());
          by_lo = std::min(by_lo, v.y());
          by_hi = std::max(by_hi, v.y());
        }
        if (bx_hi < x_lo || bx_lo > x_hi ||
            by_hi < problem.p1.y() - y_rad || by_lo > problem.p1.y() + y_rad)
          state.forbid(k, j, M);
      }
    }
  }
  return state;
}

struct Built {
  QuadraticModel qp;
  Layout layout;
  std::vector<std::pair<int, int>> free_binaries;  // (k, j) still undecided
};

// full_rows keeps every big-M row regardless of the delta state (the
// documented model structure); the branch-and-bound path drops rows that
// fixed binaries deactivate.
Built build_model(const PlannerProblem& problem, const DeltaState* state,
                  bool full_rows) {
  const PlannerConfig& cfg = problem.config;
  cfg.validate();
  if (problem.regions.empty()) {
    throw ScenarioError("build: no regions");
  }
  const int N = cfg.preview_steps;
  const int M = static_cast<int>(problem.regions.size());
  const bool fixed = problem.fixed_assignment.has_value();
  if (fixed && static_cast<int>(problem.fixed_assignment->size()) != N) {
    throw ScenarioError("build: fixed_assignment must list one region per step");
  }

  Built built;
  built.layout = Layout{N, M};
  const Layout& L = built.layout;
  QuadraticModel& qp = built.qp;
  qp.num_vars = L.total(!fixed);
  qp.fixed.assign(qp.num_vars, std::nullopt);
  qp.finalize_dims();

  const double sig_nom = cfg.sigma_nom();
  const double lambda = cfg.lambda();

  qp.fix(L.p(1, 0), problem.p1.x());
  qp.fix(L.p(1, 1), problem.p1.y());
  qp.fix(L.z(1, 0), problem.z1.x());
  qp.fix(L.z(1, 1), problem.z1.y());

  // costs
  for (int k = 2; k <= N + 1; ++k) {
    const Vec2 goal = problem.stage_goal(k);
    const double w = cfg.stage_weight(k);
    qp.add_square_cost(L.z(k, 0), w, goal.x());
    qp.add_square_cost(L.z(k, 1), w, goal.y());
  }
  qp.add_square_cost(L.sigma1(), cfg.w_sigma, sig_nom);
  for (int k = 1; k <= N - 1; ++k) {
    qp.add_square_cost(L.s(k, 0), cfg.w_x, cfg.p_x_nom);
    qp.add_square_cost(L.s(k, 1), cfg.w_y, cfg.p_y_nom);
  }

  // first-step duration variable
  if (cfg.fix_first_duration) {
    qp.fix(L.sigma1(), sig_nom);
  } else {
    double lo = cfg.sigma_min();
    if (problem.sigma1_min_override > 0.0)
      lo = std::max(lo, problem.sigma1_min_override);
    LinearRow up, down;
    up.terms = {{L.sigma1(), 1.0}};
    up.rhs = cfg.sigma_max();
    down.terms = {{L.sigma1(), -1.0}};
    down.rhs = -lo;
    qp.ineq_rows.push_back(up);
    qp.ineq_rows.push_back(down);
  }

  // stride slack definitions
  for (int k = 1; k <= N - 1; ++k) {
    const double sgn = lateral_sign(k, problem.ell);
    LinearRow sx, sy;
    sx.terms = {{L.s(k, 0), 1.0}, {L.p(k + 1, 0), -1.0}, {L.p(k, 0), 1.0}};
    sx.rhs = 0.0;
    sy.terms = {{L.s(k, 1), 1.0}, {L.p(k + 1, 1), -sgn}, {L.p(k, 1), sgn}};
    sy.rhs = 0.0;
    qp.eq_rows.push_back(std::move(sx));
    qp.eq_rows.push_back(std::move(sy));
  }

  // step-to-step dynamics; step 1 is affine in sigma_1 because (z1, p1) are
  // data, later steps run at the nominal duration
  for (int axis = 0; axis < 2; ++axis) {
    LinearRow row;
    row.terms = {{L.z(2, axis), 1.0},
                 {L.sigma1(), -(problem.z1(axis) - problem.p1(axis))}};
    row.rhs = problem.p1(axis);
    qp.eq_rows.push_back(std::move(row));
  }
  for (int k = 2; k <= N; ++k) {
    for (int axis = 0; axis < 2; ++axis) {
      LinearRow row;
      row.terms = {{L.z(k + 1, axis), 1.0},
                   {L.z(k, axis), -sig_nom},
                   {L.p(k, axis), -(1.0 - sig_nom)}};
      row.rhs = 0.0;
      qp.eq_rows.push_back(std::move(row));
    }
  }

  if (cfg.viability_constraints) {
    const double radius = cfg.capture_radius();
    for (int k = 1; k <= N; ++k) {
      const double sgn = lateral_sign(k, problem.ell);
      LinearRow lat;  // -sgn (z_y - p_y) <= -delta_y
      lat.terms = {{L.z(k, 1), -sgn}, {L.p(k, 1), sgn}};
      lat.rhs = -cfg.delta_y;
      qp.ineq_rows.push_back(std::move(lat));
      for (double dir : {1.0, -1.0}) {
        LinearRow sag;
        sag.terms = {{L.z(k, 0), dir}, {L.p(k, 0), -dir}};
        sag.rhs = radius;
        qp.ineq_rows.push_back(std::move(sag));
      }
    }
    for (int k = 1; k <= N - 1; ++k) {
      LinearRow growth;
      growth.terms = {{L.z(k + 1, 0), 1.0}, {L.z(k, 0), -1.0}};
      growth.rhs = cfg.L_max;
      qp.ineq_rows.push_back(std::move(growth));
    }
  }

  // stride boxes
  for (int k = 1; k <= N - 1; ++k) {
    for (auto [axis, lo, hi] : {std::tuple{0, cfg.L_min, cfg.L_max},
                                std::tuple{1, cfg.W_min, cfg.W_max}}) {
      LinearRow up, down;
      up.terms = {{L.s(k, axis), 1.0}};
      up.rhs = hi;
      down.terms = {{L.s(k, axis), -1.0}};
      down.rhs = -lo;
      qp.ineq_rows.push_back(std::move(up));
      qp.ineq_rows.push_back(std::move(down));
    }
  }

  // region membership
  if (fixed) {
    for (int k = 1; k <= N; ++k) {
      const int j = (*problem.fixed_assignment)[k - 1];
      if (j < 0 || j >= M)
        throw ScenarioError("build: fixed_assignment region index out of range");
      const ConvexRegion& region = problem.regions[j];
      for (int e = 0; e < region.edges(); ++e) {
        LinearRow row;
        row.terms = {{L.p(k, 0), region.A(e, 0)}, {L.p(k, 1), region.A(e, 1)}};
        row.rhs = region.b(e);
        qp.ineq_rows.push_back(std::move(row));
      }
    }
    (void)lambda;
    return built;
  }

  auto emit_plain_rows = [&](int k, int j) {
    const ConvexRegion& region = problem.regions[j];
    for (int e = 0; e < region.edges(); ++e) {
      LinearRow row;
      row.terms = {{L.p(k, 0), region.A(e, 0)}, {L.p(k, 1), region.A(e, 1)}};
      row.rhs = region.b(e);
      qp.ineq_rows.push_back(std::move(row));
    }
  };
  auto emit_bigm_rows = [&](int k, int j) {
    const ConvexRegion& region = problem.regions[j];
    for (int e = 0; e < region.edges(); ++e) {
      LinearRow row;
      row.terms = {{L.p(k, 0), region.A(e, 0)},
                   {L.p(k, 1), region.A(e, 1)},
                   {L.delta(k, j), cfg.M_big}};
      row.rhs = region.b(e) + cfg.M_big;
      qp.ineq_rows.push_back(std::move(row));
    }
  };
  auto emit_delta_box = [&](int k, int j) {
    LinearRow up, down;
    up.terms = {{L.delta(k, j), 1.0}};
    up.rhs = 1.0;
    down.terms = {{L.delta(k, j), -1.0}};
    down.rhs = 0.0;
    qp.ineq_rows.push_back(std::move(up));
    qp.ineq_rows.push_back(std::move(down));
  };

  for (int k = 1; k <= N; ++k) {
    const int assigned = state ? state->assigned[k - 1] : -1;
    auto is_forbidden = [&](int j) {
      return state && (state->forbidden[k - 1][j] != 0) && assigned != j;
    };
    // pin decided binaries
    for (int j = 0; j < M; ++j) {
      if (assigned >= 0) {
        qp.fix(L.delta(k, j), j == assigned ? 1.0 : 0.0);
      } else if (is_forbidden(j)) {
        qp.fix(L.delta(k, j), 0.0);
      } else {
        built.free_binaries.emplace_back(k, j);
      }
    }
    if (full_rows) {
      LinearRow sum;
      for (int j = 0; j < M; ++j) sum.terms.emplace_back(L.delta(k, j), 1.0);
      sum.rhs = 1.0;
      qp.eq_rows.push_back(std::move(sum));
      for (int j = 0; j < M; ++j) {
        emit_bigm_rows(k, j);
        if (!qp.fixed[L.delta(k, j)]) emit_delta_box(k, j);
      }
      continue;
    }
    if (assigned >= 0) {
      emit_plain_rows(k, assigned);
      continue;
    }
    LinearRow sum;
    for (int j = 0; j < M; ++j) {
      if (is_forbidden(j)) continue;
      sum.terms.emplace_back(L.delta(k, j), 1.0);
      emit_bigm_rows(k, j);
      emit_delta_box(k, j);
    }
    sum.rhs = 1.0;
    qp.eq_rows.push_back(std::move(sum));
  }
  (void)lambda;
  return built;
}

PlannerSolution extract_solution(const PlannerProblem& problem,
                                 const Layout& L, const QpResult& qp,
                                 const std::vector<int>& assignment) {
  const PlannerConfig& cfg = problem.config;
  PlannerSolution sol;
  sol.status = QpStatus::optimal;
  for (int k = 2; k <= L.N; ++k)
    sol.footholds.emplace_back(qp.x(L.p(k, 0)), qp.x(L.p(k, 1)));
  for (int k = 2; k <= L.N + 1; ++k)
    sol.dcm.emplace_back(qp.x(L.z(k, 0)), qp.x(L.z(k, 1)));
  sol.sigma1 = cfg.fix_first_duration ? cfg.sigma_nom() : qp.x(L.sigma1());
  sol.T1 = std::log(sol.sigma1) / cfg.lambda();
  for (int k = 1; k <= L.N - 1; ++k)
    sol.slacks.emplace_back(qp.x(L.s(k, 0)), qp.x(L.s(k, 1)));
  sol.assignment = assignment;
  sol.objective = qp.objective;
  return sol;
}

// Clean continuous resolve for a concrete assignment; shared by incumbent
// evaluation and the fixed-assignment entry path.
PlannerSolution solve_fixed(const PlannerProblem& problem,
                            const std::vector<int>& assignment,
                            SolveStats& stats) {
  PlannerProblem sub = problem;
  sub.fixed_assignment = assignment;
  Built built = build_model(sub, nullptr, false);
  const QpResult qp = solve_qp(built.qp);
  stats.qp_iterations += qp.iterations;
  PlannerSolution sol;
  if (qp.status != QpStatus::optimal) {
    sol.status = qp.status;
    return sol;
  }
  sol = extract_solution(sub, built.layout, qp, assignment);
  return sol;
}

}  // namespace

void PlannerConfig::validate() const {
  if (preview_steps < 1) throw ScenarioError("config: preview_steps < 1");
  if (!(T_min <= T_nom && T_nom <= T_max) || T_min <= 0.0)
    throw ScenarioError("config: step duration bounds inconsistent");
  if (sigma_min() > sigma_max())
    throw ScenarioError("config: sigma bounds inconsistent");
  if (L_min > L_max || W_min > W_max)
    throw ScenarioError("config: stride bounds inconsistent");
  if (!(L_min <= p_x_nom && p_x_nom <= L_max))
    throw ScenarioError("config: p_x_nom outside stride bounds");
  if (!(W_min <= p_y_nom && p_y_nom <= W_max))
    throw ScenarioError("config: p_y_nom outside width bounds");
  if (w_sigma < 0.0 || w_x < 0.0 || w_y < 0.0 || w_z_default < 0.0)
    throw ScenarioError("config: negative weight");
  for (double w : w_z)
    if (w < 0.0) throw ScenarioError("config: negative stage weight");
  if (M_big <= 0.0) throw ScenarioError("config: M_big must be positive");
}

QuadraticModel build(const PlannerProblem& problem) {
  if (problem.fixed_assignment) return build_model(problem, nullptr, false).qp;
  const DeltaState root = make_root_state(problem, false);
  return build_model(problem, &root, true).qp;
}

PlannerSolution solve(const PlannerProblem& problem) {
  const auto t0 = std::chrono::steady_clock::now();
  SolveStats stats;
  auto finish = [&](PlannerSolution sol) {
    stats.wall_time_us = std::chrono::duration_cast<std::chrono::microseconds>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
    sol.stats = stats;
    return sol;
  };

  if (problem.fixed_assignment) {
    PlannerSolution sol = solve_fixed(problem, *problem.fixed_assignment, stats);
    stats.nodes = 1;
    return finish(std::move(sol));
  }

  const int N = problem.config.preview_steps;
  const int M = static_cast<int>(problem.regions.size());
  const Layout L{N, M};

  struct Node {
    DeltaState state;
    double bound{-std::numeric_limits<double>::infinity()};
    bool has_x{false};
    Eigen::VectorXd x;
    std::vector<std::pair<int, int>> free_binaries;
  };

  QpOptions node_opts;
  node_opts.tol_feas = 1e-8;
  node_opts.tol_gap = 1e-8;

  auto solve_relaxation = [&](Node& node) -> QpStatus {
    Built built = build_model(problem, &node.state, false);
    const QpResult qp = solve_qp(built.qp, node_opts);
    stats.qp_iterations += qp.iterations;
    ++stats.nodes;
    node.free_binaries = std::move(built.free_binaries);
    if (qp.status != QpStatus::optimal) return qp.status;
    node.bound = qp.objective;
    node.x = qp.x;
    node.has_x = true;
    return QpStatus::optimal;
  };

  PlannerSolution incumbent;
  incumbent.status = QpStatus::infeasible;
  std::vector<int> incumbent_assignment;
  double incumbent_obj = std::numeric_limits<double>::infinity();
  bool budget_exhausted = false;

  auto lex_less = [](const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
  };

  auto try_incumbent = [&](const std::vector<int>& assignment) {
    PlannerSolution cand = solve_fixed(problem, assignment, stats);
    if (cand.status != QpStatus::optimal) return;
    if (cand.objective < incumbent_obj - kTieTol ||
        (std::abs(cand.objective - incumbent_obj) <= kTieTol &&
         (incumbent_assignment.empty() ||
          lex_less(assignment, incumbent_assignment)))) {
      incumbent = std::move(cand);
      incumbent_assignment = assignment;
      incumbent_obj = incumbent.objective;
    }
  };

  std::vector<Node> stack;
  {
    Node root;
    root.state = make_root_state(problem, true);
    if (root.state.impossible) {
      PlannerSolution sol;
      sol.status = QpStatus::infeasible;
      return finish(std::move(sol));
    }
    const QpStatus st = solve_relaxation(root);
    // iteration-limited relaxations stay in the tree with an open bound so
    // pruning remains sound
    if (st != QpStatus::infeasible) stack.push_back(std::move(root));
  }

  while (!stack.empty()) {
    if (stats.nodes > problem.config.node_budget) {
      budget_exhausted = true;
      break;
    }
    Node node = std::move(stack.back());
    stack.pop_back();
    if (node.bound > incumbent_obj + kTieTol) continue;

    // pick the most fractional undecided binary (or the first undecided one
    // when the relaxation did not converge)
    int frac_k = -1, frac_j = -1;
    if (node.has_x) {
      double best_frac = kIntTol;
      for (const auto& [k, j] : node.free_binaries) {
        const double v = node.x(L.delta(k, j));
        const double frac = std::min(v, 1.0 - v);
        if (frac > best_frac) {
          best_frac = frac;
          frac_k = k;
          frac_j = j;
        }
      }
    } else if (!node.free_binaries.empty()) {
      frac_k = node.free_binaries.front().first;
      frac_j = node.free_binaries.front().second;
    }

    if (frac_k < 0) {
      if (!node.has_x) continue;  // fully decided yet unsolvable
      // integral relaxation: recover the assignment and fathom
      std::vector<int> assignment(N, -1);
      for (int k = 1; k <= N; ++k) {
        if (node.state.assigned[k - 1] >= 0) {
          assignment[k - 1] = node.state.assigned[k - 1];
          continue;
        }
        double best_v = -1.0;
        for (int j = 0; j < M; ++j) {
          if (node.state.forbidden[k - 1][j]) continue;
          const double v = node.x(L.delta(k, j));
          if (v > best_v) {
            best_v = v;
            assignment[k - 1] = j;
          }
        }
      }
      try_incumbent(assignment);
      continue;
    }

    // branch; evaluate both children eagerly and dive into the better
    // bound first
    Node child1, child0;
    child1.state = node.state;
    child1.state.assigned[frac_k - 1] = frac_j;
    child0.state = node.state;
    child0.state.forbid(frac_k, frac_j, M);
    const QpStatus st1 = solve_relaxation(child1);
    const QpStatus st0 = child0.state.impossible
                             ? QpStatus::infeasible
                             : solve_relaxation(child0);
    const bool keep1 = st1 != QpStatus::infeasible &&
                       child1.bound <= incumbent_obj + kTieTol;
    const bool keep0 = st0 != QpStatus::infeasible &&
                       child0.bound <= incumbent_obj + kTieTol;
    if (keep1 && keep0) {
      if (child1.bound <= child0.bound) {
        stack.push_back(std::move(child0));
        stack.push_back(std::move(child1));
      } else {
        stack.push_back(std::move(child1));
        stack.push_back(std::move(child0));
      }
    } else if (keep1) {
      stack.push_back(std::move(child1));
    } else if (keep0) {
      stack.push_back(std::move(child0));
    }
  }

  if (budget_exhausted) {
    PlannerSolution sol = incumbent_assignment.empty() ? PlannerSolution{}
                                                       : incumbent;
    sol.status = QpStatus::iteration_limit;
    return finish(std::move(sol));
  }
  return finish(std::move(incumbent));
}

PlannerSolution replan(const DcmState& state,
                       const std::vector<ConvexRegion>& regions,
                       const PlannerConfig& config, const Vec2& xi_meas) {
  PlannerProblem problem;
  problem.config = config;
  problem.p1 = state.p;
  problem.ell = stance_sign(state.stance_side);
  problem.z1 =
      backward_init(xi_meas, state.t_elapsed, state.p, config.template_params);
  problem.regions = regions;
  problem.sigma1_min_override = std::exp(
      config.lambda() * (state.t_elapsed + config.replan_T_floor));
  return solve(problem);
}

// --- serialization ---------------------------------------------------------

namespace {

void put(std::ostream& os, const char* key, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  os << key << ' ' << buf << '\n';
}

void put2(std::ostream& os, const char* key, const Vec2& v) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%.17g %.17g", v.x(), v.y());
  os << key << ' ' << buf << '\n';
}

double expect_double(std::istream& is, const std::string& key) {
  std::string tok;
  double v;
  if (!(is >> tok >> v) || tok != key)
    throw ScenarioError("parse: expected '" + key + "'");
  return v;
}

Vec2 expect_vec2(std::istream& is, const std::string& key) {
  std::string tok;
  Vec2 v;
  if (!(is >> tok >> v.x() >> v.y()) || tok != key)
    throw ScenarioError("parse: expected '" + key + "'");
  return v;
}

}  // namespace

void write_problem(const PlannerProblem& problem, std::ostream& os) {
  const PlannerConfig& c = problem.config;
  os << "plannerproblem v1\n";
  os << "N " << c.preview_steps << '\n';
  put(os, "T_nom", c.T_nom);
  put(os, "T_min", c.T_min);
  put(os, "T_max", c.T_max);
  put(os, "L_min", c.L_min);
  put(os, "L_max", c.L_max);
  put(os, "W_min", c.W_min);
  put(os, "W_max", c.W_max);
  put(os, "delta_x", c.delta_x);
  put(os, "delta_y", c.delta_y);
  os << "w_z " << c.w_z.size();
  for (double w : c.w_z) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %.17g", w);
    os << buf;
  }
  os << '\n';
  put(os, "w_z_default", c.w_z_default);
  put(os, "w_sigma", c.w_sigma);
  put(os, "w_x", c.w_x);
  put(os, "w_y", c.w_y);
  put(os, "M_big", c.M_big);
  put(os, "p_x_nom", c.p_x_nom);
  put(os, "p_y_nom", c.p_y_nom);
  put2(os, "z_goal", c.z_goal);
  put(os, "gravity", c.template_params.gravity);
  put(os, "com_height", c.template_params.com_height);
  os << "viability " << (c.viability_constraints ? 1 : 0) << '\n';
  os << "fix_first_duration " << (c.fix_first_duration ? 1 : 0) << '\n';
  os << "max_regions " << c.max_regions << '\n';
  os << "node_budget " << c.node_budget << '\n';
  put(os, "replan_T_floor", c.replan_T_floor);
  put2(os, "z1", problem.z1);
  put2(os, "p1", problem.p1);
  os << "ell " << problem.ell << '\n';
  put(os, "sigma1_min_override", problem.sigma1_min_override);
  if (problem.fixed_assignment) {
    os << "fixed_assignment " << problem.fixed_assignment->size();
    for (int j : *problem.fixed_assignment) os << ' ' << j;
    os << '\n';
  } else {
    os << "fixed_assignment -\n";
  }
  write_regions(problem.regions, os);
  os << "end\n";
}

PlannerProblem read_problem(std::istream& is) {
  std::string tok, version;
  if (!(is >> tok >> version) || tok != "plannerproblem" || version != "v1")
    throw ScenarioError("read_problem: bad header");
  PlannerProblem problem;
  PlannerConfig& c = problem.config;
  std::string key;
  if (!(is >> key >> c.preview_steps) || key != "N")
    throw ScenarioError("read_problem: expected N");
  c.T_nom = expect_double(is, "T_nom");
  c.T_min = expect_double(is, "T_min");
  c.T_max = expect_double(is, "T_max");
  c.L_min = expect_double(is, "L_min");
  c.L_max = expect_double(is, "L_max");
  c.W_min = expect_double(is, "W_min");
  c.W_max = expect_double(is, "W_max");
  c.delta_x = expect_double(is, "delta_x");
  c.delta_y = expect_double(is, "delta_y");
  size_t nw;
  if (!(is >> key >> nw) || key != "w_z")
    throw ScenarioError("read_problem: expected w_z");
  c.w_z.resize(nw);
  for (auto& w : c.w_z)
    if (!(is >> w)) throw ScenarioError("read_problem: truncated w_z");
  c.w_z_default = expect_double(is, "w_z_default");
  c.w_sigma = expect_double(is, "w_sigma");
  c.w_x = expect_double(is, "w_x");
  c.w_y = expect_double(is, "w_y");
  c.M_big = expect_double(is, "M_big");
  c.p_x_nom = expect_double(is, "p_x_nom");
  c.p_y_nom = expect_double(is, "p_y_nom");
  c.z_goal = expect_vec2(is, "z_goal");
  c.template_params.gravity = expect_double(is, "gravity");
  c.template_params.com_height = expect_double(is, "com_height");
  c.viability_constraints = expect_double(is, "viability") != 0.0;
  c.fix_first_duration = expect_double(is, "fix_first_duration") != 0.0;
  c.max_regions = static_cast<int>(expect_double(is, "max_regions"));
  c.node_budget = static_cast<long>(expect_double(is, "node_budget"));
  c.replan_T_floor = expect_double(is, "replan_T_floor");
  problem.z1 = expect_vec2(is, "z1");
  problem.p1 = expect_vec2(is, "p1");
  if (!(is >> key >> problem.ell) || key != "ell")
    throw ScenarioError("read_problem: expected ell");
  problem.sigma1_min_override = expect_double(is, "sigma1_min_override");
  if (!(is >> key) || key != "fixed_assignment")
    throw ScenarioError("read_problem: expected fixed_assignment");
  if (!(is >> tok)) throw ScenarioError("read_problem: truncated");
  if (tok != "-") {
    const size_t n = std::stoul(tok);
    std::vector<int> fa(n);
    for (auto& j : fa)
      if (!(is >> j)) throw ScenarioError("read_problem: truncated assignment");
    problem.fixed_assignment = std::move(fa);
  }
  problem.regions = read_regions(is);
  if (!(is >> tok) || tok != "end")
    throw ScenarioError("read_problem: expected end");
  return problem;
}

void write_solution(const PlannerSolution& solution, std::ostream& os) {
  os << "plannersolution v1\n";
  os << "status "
     << (solution.status == QpStatus::optimal
             ? "optimal"
             : solution.status == QpStatus::infeasible ? "infeasible"
                                                       : "iteration_limit")
     << '\n';
  put(os, "objective", solution.objective);
  put(os, "sigma1", solution.sigma1);
  put(os, "T1", solution.T1);
  os << "assignment " << solution.assignment.size();
  for (int j : solution.assignment) os << ' ' << j;
  os << '\n';
  os << "footholds " << solution.footholds.size() << '\n';
  for (const auto& p : solution.footholds) put2(os, "p", p);
  os << "dcm " << solution.dcm.size() << '\n';
  for (const auto& z : solution.dcm) put2(os, "z", z);
  os << "slacks " << solution.slacks.size() << '\n';
  for (const auto& s : solution.slacks) put2(os, "s", s);
  os << "nodes " << solution.stats.nodes << '\n';
  os << "qp_iterations " << solution.stats.qp_iterations << '\n';
  os << "wall_time_us " << solution.stats.wall_time_us << '\n';
  os << "end\n";
}

PlannerSolution read_solution(std::istream& is) {
  std::string tok, version;
  if (!(is >> tok >> version) || tok != "plannersolution" || version != "v1")
    throw ScenarioError("read_solution: bad header");
  PlannerSolution sol;
  std::string status;
  if (!(is >> tok >> status) || tok != "status")
    throw ScenarioError("read_solution: expected status");
  sol.status = status == "optimal"
                   ? QpStatus::optimal
                   : status == "infeasible" ? QpStatus::infeasible
                                            : QpStatus::iteration_limit;
  sol.objective = expect_double(is, "objective");
  sol.sigma1 = expect_double(is, "sigma1");
  sol.T1 = expect_double(is, "T1");
  size_t n;
  if (!(is >> tok >> n) || tok != "assignment")
    throw ScenarioError("read_solution: expected assignment");
  sol.assignment.resize(n);
  for (auto& j : sol.assignment)
    if (!(is >> j)) throw ScenarioError("read_solution: truncated assignment");
  if (!(is >> tok >> n) || tok != "footholds")
    throw ScenarioError("read_solution: expected footholds");
  sol.footholds.resize(n);
  for (auto& p : sol.footholds) p = expect_vec2(is, "p");
  if (!(is >> tok >> n) || tok != "dcm")
    throw ScenarioError("read_solution: expected dcm");
  sol.dcm.resize(n);
  for (auto& z : sol.dcm) z = expect_vec2(is, "z");
  if (!(is >> tok >> n) || tok != "slacks")
    throw ScenarioError("read_solution: expected slacks");
  sol.slacks.resize(n);
  for (auto& s : sol.slacks) s = expect_vec2(is, "s");
  sol.stats.nodes = static_cast<long>(expect_double(is, "nodes"));
  sol.stats.qp_iterations =
      static_cast<long>(expect_double(is, "qp_iterations"));
  sol.stats.wall_time_us =
      static_cast<long>(expect_double(is, "wall_time_us"));
  if (!(is >> tok) || tok != "end")
    throw ScenarioError("read_solution: expected end");
  return sol;
}

}  // namespace stepstone
