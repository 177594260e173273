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

// Closed-form template math for the divergent component of motion (DCM)
// of a constant-height inverted pendulum: within-step evolution, the
// step-to-step map, measurement back-propagation, and capturability bounds.

#pragma once

#include <cmath>

#include "stepstone/common.hpp"

namespace stepstone {

struct TemplateParams {
  double gravity{9.8};
  double com_height{0.9};

  double lambda() const { return std::sqrt(gravity / com_height); }
};

enum class StanceSide { left, right };

inline StanceSide opposite(StanceSide s) {
  return s == StanceSide::left ? StanceSide::right : StanceSide::left;
}

/// Stance sign: 1 for right stance, 0 for left. Drives the lateral
/// inner-side sign flip (-1)^(k+ell).
inline int stance_sign(StanceSide s) { return s == StanceSide::right ? 1 : 0; }

/// Planar DCM state during one step, expressed in the stance-foot frame.
struct DcmState {
  Vec2 xi{Vec2::Zero()};        // instantaneous DCM
  Vec2 xi0{Vec2::Zero()};       // DCM at the start of the step
  Vec2 p{Vec2::Zero()};         // stance foot position
  StanceSide stance_side{StanceSide::right};
  double t_elapsed{0.0};        // time since step start
  double T_current{0.5};        // current target step duration
};

/// DCM at elapsed time t within a step: p + (xi0 - p) e^(lambda t).
inline Vec2 dcm_at(const Vec2& xi0, const Vec2& p, double t,
                   const TemplateParams& params) {
  return p + (xi0 - p) * std::exp(params.lambda() * t);
}

/// Step-to-step map: DCM offset from the stance foot grows by e^(lambda T).
inline Vec2 step_map(const Vec2& xi0, const Vec2& p, double T,
                     const TemplateParams& params) {
  const double sigma = std::exp(params.lambda() * T);
  return sigma * xi0 + (1.0 - sigma) * p;
}

/// Back-propagates a measured instantaneous DCM to the start of the step,
/// anchoring the planner's initial state to the measurement.
inline Vec2 backward_init(const Vec2& xi_meas, double t_elapsed, const Vec2& p,
                          const TemplateParams& params) {
  const double a = std::exp(-params.lambda() * t_elapsed);
  return a * xi_meas + (1.0 - a) * p;
}

/// Sagittal capturability radius: the largest DCM offset that future steps
/// of length at most L_max taken every T_min can absorb, tightened by the
/// robustness margin delta_x. Non-positive results mean the configured
/// bounds are infeasible.
inline double sagittal_capture_radius(double L_max, double T_min,
                                      double delta_x,
                                      const TemplateParams& params) {
  const double growth = std::exp(params.lambda() * T_min) - 1.0;
  if (growth <= 0.0) {
    throw ScenarioError("sagittal_capture_radius: e^(lambda T_min) must exceed 1");
  }
  const double radius = L_max / growth - delta_x;
  if (radius <= 0.0) {
    throw ScenarioError("sagittal_capture_radius: bounds infeasible (radius <= 0)");
  }
  return radius;
}

/// Inner-side lateral corridor test for step k with stance sign ell:
/// (-1)^(k+ell) (xi0_y - p_y) >= delta_y.
inline bool lateral_ok(double xi0_y, double p_y, int k, int ell,
                       double delta_y) {
  const double sign = ((k + ell) % 2 == 0) ? 1.0 : -1.0;
  return sign * (xi0_y - p_y) >= delta_y;
}

}  // namespace stepstone
