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

// Template-dynamics walking environment: randomized stone fields, synthetic
// depth sensing, a kinematic minimum-jerk swing foot driven by a phase
// variable, scheduled pushes, and the closed planning/perception loop.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <string>
#include <vector>

#include "stepstone/common.hpp"
#include "stepstone/dcm.hpp"
#include "stepstone/heightmap.hpp"
#include "stepstone/miqp.hpp"
#include "stepstone/regions.hpp"

namespace stepstone {

struct Stone {
  Polygon polygon;  // world frame
  double height{0.0};
};

struct StoneField {
  std::vector<Stone> stones;
  double x_min{0}, x_max{0}, y_min{0}, y_max{0};
  double void_depth{-0.3};  // ground level between stones
  std::uint64_t seed{0};

  /// Terrain height at a world point; hit=false off every stone.
  double height_at(const Vec2& p, bool* hit = nullptr) const;
  int stone_at(const Vec2& p) const;  // -1 off every stone
};

struct FieldParams {
  std::uint64_t seed{1};
  double density{2.0};  // background stones per square meter
  double stone_min{0.12};
  double stone_max{0.20};
  double gap_min{0.05};
  double gap_max{0.30};
  // walkable chain toward +x; gaps are edge-to-edge
  double chain_gap_min{0.08};
  double chain_gap_max{0.20};
  double chain_y_jitter{0.22};
  double x_min{-1.0}, x_max{6.5}, y_min{-1.2}, y_max{1.2};
  double start_radius{0.35};
  double height_jitter{0.01};
};

StoneField generate_field(const FieldParams& params);

struct SyntheticDepthSensor {
  Vec3 mount{0.05, 0.0, 1.2};  // relative to the stance foot
  double mount_yaw{0.0};       // pi for the backward sensor
  double fov{3.2};             // horizontal, radians
  int n_azimuth{240};          // ray grid: azimuth bins x range rings
  int n_range{96};
  double r_near{0.10};         // ground-projected ring radii
  double r_far{2.2};
  double sigma0{0.01};
  double dropout{0.05};
  double max_range{6.0};
};

/// Ray-grid sample of the stone field from the mounted pose (rays indexed
/// by their ground-plane intersections), with range/incidence-scaled
/// Gaussian height noise and random dropout. Returned in the stance frame.
PointCloud sense(const StoneField& field, const StancePose& stance,
                 const SyntheticDepthSensor& sensor, std::mt19937_64& rng);

/// Noise-free ground-truth samples on a disc around the stance foot,
/// standing in for contact/proprioceptive height information.
PointCloud sample_contact_patch(const StoneField& field,
                                const StancePose& stance, double radius,
                                double spacing);

/// Quintic minimum-jerk swing interpolation in the plane, with mid-swing
/// retargeting that preserves position, velocity, and acceleration at the
/// retarget instant.
class SwingTrajectory {
 public:
  void reset(const Vec2& start, const Vec2& target);
  void retarget(const Vec2& new_target, double phase);
  Vec2 position(double phase) const;
  Vec2 velocity(double phase) const;  // d(position)/d(phase)
  const Vec2& target() const { return target_; }

 private:
  Vec2 start_{Vec2::Zero()}, target_{Vec2::Zero()};
  double seg_start_{0.0};
  Eigen::Matrix<double, 6, 2> coeffs_{Eigen::Matrix<double, 6, 2>::Zero()};
};

/// Single-shot helper: fresh swing from rest evaluated at one phase.
Vec2 swing_trajectory(const Vec2& start, const Vec2& target, double phase);
/// Swing apex height profile (zero at both ends, apex at mid-phase).
double swing_height(double phase, double apex);

struct Disturbance {
  double time{0.0};
  Vec2 impulse{Vec2::Zero()};  // instantaneous DCM offset
};

struct Scenario {
  FieldParams field;
  PlannerConfig planner;
  RegionExtractionConfig regions;
  PerceptionConfig perception;
  SensorModel sensor_model;
  std::vector<SyntheticDepthSensor> sensors;  // default forward + backward
  std::vector<Disturbance> pushes;
  double goal_x{5.0};
  double goal_tolerance{0.3};
  double timeout{60.0};
  double dt{0.001};
  double replan_period{0.030};
  double perception_period{0.180};
  bool replan_in_step{true};
  bool contact_patch{true};
  double swing_apex{0.08};
  std::uint64_t seed{1};

  static Scenario defaults();
};

Scenario load_scenario(std::istream& is);
void save_scenario(const Scenario& scenario, std::ostream& os);

enum class Outcome { goal_reached, fall, timeout };

struct TickRow {
  double t{0.0};
  int stance_side{1};  // 1 right, 0 left
  Vec2 p_world{Vec2::Zero()};
  Vec2 xi_world{Vec2::Zero()};
  Vec2 xi0_world{Vec2::Zero()};
  Vec2 com{Vec2::Zero()};
  Vec2 com_vel{Vec2::Zero()};
  double phase{0.0};
  double T_current{0.0};
  int planner_status{-1};  // -1 none, 0 optimal, 1 infeasible, 2 limit
  long solve_us{0};
  int transition{0};
};

struct StepRecord {
  int index{0};
  double t_start{0.0};
  double t_touchdown{0.0};
  Vec2 position{Vec2::Zero()};  // world stance position after touchdown
  int side{1};
  double T_planned_at_start{0.0};
  double T_final{0.0};
  bool fallback{false};
};

struct PlanRecord {
  double t{0.0};
  double t_in_step{0.0};
  int status{0};
  double sigma1{0.0};
  double T1{0.0};
  long solve_us{0};
  long nodes{0};
  Vec2 target{Vec2::Zero()};  // commanded swing landing, stance frame
  bool fallback{false};
};

struct TrajectoryLog {
  std::vector<TickRow> ticks;
  std::vector<StepRecord> steps;
  std::vector<PlanRecord> plans;
  Outcome outcome{Outcome::timeout};
  double duration{0.0};
  Vec2 fall_position{Vec2::Zero()};
  double mean_x_velocity{0.0};

  void write_csv(std::ostream& os) const;
};

/// Runs one closed-loop episode at the fixed simulation timestep.
TrajectoryLog step_closed_loop(const Scenario& scenario);

}  // namespace stepstone
