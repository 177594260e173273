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

#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>
#include <string>

namespace stepstone {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Raised on malformed scenario/problem/config input (CLI exit code 2).
class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Raised when an internal invariant is violated (CLI exit code 3).
class InternalError : public std::runtime_error {
 public:
  explicit InternalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Planar pose of the stance foot in world frame: 3D position plus yaw,
/// the only rotational degree of freedom the map tracks.
struct StancePose {
  Vec3 position{Vec3::Zero()};
  double yaw{0.0};
};

inline Eigen::Matrix2d yaw_rotation(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

}  // namespace stepstone
