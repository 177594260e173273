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

// Standalone re-evaluation of every planner constraint group directly from
// the problem and solution fields. Deliberately shares no code with the
// model builder or the QP kernel.

#pragma once

#include <string>
#include <vector>

#include "stepstone/miqp.hpp"

namespace stepstone {

struct CheckReport {
  struct Violation {
    std::string group;
    int step;
    double magnitude;
  };
  std::vector<Violation> violations;
  double objective_recomputed{0.0};

  bool ok() const { return violations.empty(); }
  double max_violation() const;
  std::string summary() const;
};

CheckReport check_solution(const PlannerProblem& problem,
                           const PlannerSolution& solution,
                           double tol = 1e-8, double objective_tol = 1e-9);

}  // namespace stepstone
