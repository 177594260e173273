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

// Dense convex QP kernel: Mehrotra predictor-corrector primal-dual interior
// point over sparse linear rows. Sized for the small, well-scaled planner
// subproblems; infeasibility is certified by an elastic-relaxation resolve.

#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "stepstone/common.hpp"

namespace stepstone {

enum class QpStatus { optimal, infeasible, iteration_limit };

/// One linear constraint over a few variables: sum(coeff * x[idx]) (=|<=) rhs.
struct LinearRow {
  std::vector<std::pair<int, double>> terms;
  double rhs{0.0};
};

/// min 0.5 x'Hx + g'x + c0  s.t.  eq rows hold, ineq rows <= rhs.
/// Variables may be pinned to a fixed value; the solver eliminates them.
struct QuadraticModel {
  int num_vars{0};
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double c0{0.0};
  std::vector<LinearRow> eq_rows;
  std::vector<LinearRow> ineq_rows;
  std::vector<std::optional<double>> fixed;

  int add_var() {
    const int idx = num_vars++;
    fixed.emplace_back(std::nullopt);
    return idx;
  }
  void finalize_dims() {
    H = Eigen::MatrixXd::Zero(num_vars, num_vars);
    g = Eigen::VectorXd::Zero(num_vars);
  }
  void add_square_cost(int var, double weight, double target) {
    H(var, var) += 2.0 * weight;
    g(var) += -2.0 * weight * target;
    c0 += weight * target * target;
  }
  void fix(int var, double value) { fixed[var] = value; }

  double objective(const Eigen::VectorXd& x) const {
    return 0.5 * x.dot(H * x) + g.dot(x) + c0;
  }
};

struct QpOptions {
  double tol_feas{1e-9};
  double tol_gap{1e-10};
  int max_iters{60};
  double reg{1e-10};
  bool classify_infeasible{true};  // run the elastic resolve on failure
};

struct QpResult {
  QpStatus status{QpStatus::iteration_limit};
  Eigen::VectorXd x;       // full-length, fixed values filled in
  double objective{0.0};
  int iterations{0};
  Eigen::VectorXd y_eq;    // equality duals
  Eigen::VectorXd z_in;    // inequality duals (>= 0)
  double kkt_stationarity{0.0};
  double kkt_equality{0.0};
  double kkt_inequality{0.0};
  double kkt_complementarity{0.0};
};

QpResult solve_qp(const QuadraticModel& model, const QpOptions& opts = {});

}  // namespace stepstone
