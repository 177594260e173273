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

#include "stepstone/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

namespace stepstone {

namespace {

struct Bbox {
  double x_lo, x_hi, y_lo, y_hi;
  bool contains(const Vec2& p) const {
    return p.x() >= x_lo && p.x() <= x_hi && p.y() >= y_lo && p.y() <= y_hi;
  }
};

Bbox bbox_of(const Polygon& poly) {
  Bbox b{1e30, -1e30, 1e30, -1e30};
  for (const auto& v : poly.vertices) {
    b.x_lo = std::min(b.x_lo, v.x());
    b.x_hi = std::max(b.x_hi, v.x());
    b.y_lo = std::min(b.y_lo, v.y());
    b.y_hi = std::max(b.y_hi, v.y());
  }
  return b;
}

}  // namespace

double StoneField::height_at(const Vec2& p, bool* hit) const {
  const int idx = stone_at(p);
  if (hit) *hit = idx >= 0;
  return idx >= 0 ? stones[idx].height : void_depth;
}

int StoneField::stone_at(const Vec2& p) const {
  for (size_t i = 0; i < stones.size(); ++i)
    if (stones[i].polygon.contains(p)) return static_cast<int>(i);
  return -1;
}

StoneField generate_field(const FieldParams& params) {
  if (params.stone_min <= 0.0 || params.stone_max < params.stone_min ||
      params.gap_min < 0.0 || params.gap_max < params.gap_min)
    throw ScenarioError("generate_field: ranges must be positive and ordered");

  StoneField field;
  field.seed = params.seed;
  field.x_min = params.x_min;
  field.x_max = params.x_max;
  field.y_min = params.y_min;
  field.y_max = params.y_max;

  std::mt19937_64 rng(params.seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };

  struct Placed {
    Vec2 center;
    double radius;
  };
  std::vector<Placed> placed;

  auto make_stone = [&](const Vec2& center, double radius,
                        double height) -> Stone {
    const int nv = 4 + static_cast<int>(rng() % 5);
    Polygon ring;
    std::vector<double> angles(nv);
    for (auto& a : angles) a = uni(0.0, 2.0 * M_PI);
    std::sort(angles.begin(), angles.end());
    for (double a : angles) {
      const double r = radius * uni(0.72, 1.0);
      ring.vertices.push_back(center + r * Vec2(std::cos(a), std::sin(a)));
    }
    Polygon hull = convex_hull(ring);
    if (hull.vertices.size() < 3) {
      // nearly collinear draw: fall back to a regular polygon
      hull.vertices.clear();
      for (int i = 0; i < 6; ++i) {
        const double a = 2.0 * M_PI * i / 6.0;
        hull.vertices.push_back(center +
                                0.85 * radius * Vec2(std::cos(a), std::sin(a)));
      }
    }
    Stone stone;
    stone.polygon = std::move(hull);
    stone.height = height;
    return stone;
  };

  // start platform under both feet
  {
    Stone start;
    for (int i = 0; i < 10; ++i) {
      const double a = 2.0 * M_PI * i / 10.0;
      start.polygon.vertices.push_back(params.start_radius *
                                       Vec2(std::cos(a), std::sin(a)));
    }
    start.height = 0.0;
    field.stones.push_back(std::move(start));
    placed.push_back({Vec2::Zero(), params.start_radius});
  }

  auto overlaps = [&](const Vec2& c, double r, double gap) {
    for (const auto& q : placed)
      if ((c - q.center).norm() < r + q.radius + gap) return true;
    return false;
  };

  // walkable chain toward +x; gaps are edge-to-edge
  double edge = params.start_radius;
  while (edge < params.x_max - 0.3) {
    const double gap = uni(params.chain_gap_min, params.chain_gap_max);
    const double r = uni(params.stone_min, params.stone_max);
    const double cx = edge + gap + r;
    for (int attempt = 0; attempt < 5; ++attempt) {
      const Vec2 c(cx, uni(-params.chain_y_jitter, params.chain_y_jitter));
      if (overlaps(c, r, 0.01)) continue;
      field.stones.push_back(
          make_stone(c, r, uni(-params.height_jitter, params.height_jitter)));
      placed.push_back({c, r});
      break;
    }
    edge = cx + r;
  }

  // background fill
  const double area =
      (params.x_max - params.x_min) * (params.y_max - params.y_min);
  const long target = std::lround(params.density * area);
  long count = 0;
  long attempts = 0;
  const long max_attempts = 60 * std::max<long>(target, 1);
  while (count < target && attempts < max_attempts) {
    ++attempts;
    const double r = uni(params.stone_min, params.stone_max);
    const Vec2 c(uni(params.x_min + r, params.x_max - r),
                 uni(params.y_min + r, params.y_max - r));
    const double gap = uni(params.gap_min, params.gap_max);
    if (overlaps(c, r, gap)) continue;
    field.stones.push_back(
        make_stone(c, r, uni(-params.height_jitter, params.height_jitter)));
    placed.push_back({c, r});
    ++count;
  }
  if (target > 0 && count * 4 < target)
    throw ScenarioError("generate_field: density infeasible within bounds");
  return field;
}

PointCloud sense(const StoneField& field, const StancePose& stance,
                 const SyntheticDepthSensor& sensor, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Eigen::Matrix2d rot = yaw_rotation(stance.yaw);
  const Vec2 origin_xy =
      stance.position.head<2>() + rot * sensor.mount.head<2>();
  const double origin_z = stance.position.z() + sensor.mount.z();
  const double yaw_total = stance.yaw + sensor.mount_yaw;

  SensorModel noise_model;
  noise_model.sigma0 = sensor.sigma0;
  noise_model.max_range = sensor.max_range;

  std::vector<Bbox> boxes(field.stones.size());
  for (size_t i = 0; i < field.stones.size(); ++i)
    boxes[i] = bbox_of(field.stones[i].polygon);

  PointCloud cloud;
  cloud.frame = PointCloud::Frame::stance;
  cloud.origin.head<2>() = rot.transpose() * (origin_xy - stance.position.head<2>());
  cloud.origin.z() = origin_z - stance.position.z();

  for (int ia = 0; ia < sensor.n_azimuth; ++ia) {
    const double az =
        yaw_total - 0.5 * sensor.fov + sensor.fov * (ia + 0.5) / sensor.n_azimuth;
    const Vec2 dir(std::cos(az), std::sin(az));
    for (int ir = 0; ir < sensor.n_range; ++ir) {
      const double r = sensor.r_near + (sensor.r_far - sensor.r_near) *
                                           (ir + 0.5) / sensor.n_range;
      const Vec2 hit_xy = origin_xy + r * dir;
      double h = field.void_depth;
      for (size_t i = 0; i < field.stones.size(); ++i) {
        if (!boxes[i].contains(hit_xy)) continue;
        if (field.stones[i].polygon.contains(hit_xy)) {
          h = field.stones[i].height;
          break;
        }
      }
      const Vec3 rel(hit_xy.x() - origin_xy.x(), hit_xy.y() - origin_xy.y(),
                     h - origin_z);
      if (rel.norm() > sensor.max_range) continue;
      if (u01(rng) < sensor.dropout) continue;

      const double sigma = std::sqrt(observation_variance(rel, noise_model));
      const double z_noisy = h + sigma * gauss(rng);

      Vec3 p;
      p.head<2>() = rot.transpose() * (hit_xy - stance.position.head<2>());
      p.z() = z_noisy - stance.position.z();
      cloud.points.push_back(p);
    }
  }
  return cloud;
}

PointCloud sample_contact_patch(const StoneField& field,
                                const StancePose& stance, double radius,
                                double spacing) {
  PointCloud cloud;
  cloud.frame = PointCloud::Frame::stance;
  cloud.origin = Vec3(0.0, 0.0, 0.4);
  const Eigen::Matrix2d rot = yaw_rotation(stance.yaw);
  const int n = static_cast<int>(std::floor(radius / spacing));
  for (int i = -n; i <= n; ++i) {
    for (int j = -n; j <= n; ++j) {
      const Vec2 local(i * spacing, j * spacing);
      if (local.norm() > radius) continue;
      const Vec2 world = stance.position.head<2>() + rot * local;
      const double h = field.height_at(world);
      cloud.points.emplace_back(local.x(), local.y(),
                                h - stance.position.z());
    }
  }
  return cloud;
}

// --- swing trajectory -------------------------------------------------------

namespace {

Eigen::Matrix<double, 6, 2> quintic_coeffs(const Vec2& p0, const Vec2& v0,
                                           const Vec2& a0, const Vec2& pT,
                                           double span) {
  Eigen::Matrix<double, 6, 2> c = Eigen::Matrix<double, 6, 2>::Zero();
  c.row(0) = p0.transpose();
  c.row(1) = v0.transpose();
  c.row(2) = 0.5 * a0.transpose();
  const double L = span, L2 = L * L, L3 = L2 * L, L4 = L3 * L, L5 = L4 * L;
  Eigen::Matrix3d m;
  m << L3, L4, L5, 3 * L2, 4 * L3, 5 * L4, 6 * L, 12 * L2, 20 * L3;
  Eigen::Matrix<double, 3, 2> rhs;
  rhs.row(0) = (pT - (p0 + v0 * L + 0.5 * a0 * L2)).transpose();
  rhs.row(1) = (-(v0 + a0 * L)).transpose();
  rhs.row(2) = (-a0).transpose();
  c.bottomRows<3>() = m.partialPivLu().solve(rhs);
  return c;
}

}  // namespace

void SwingTrajectory::reset(const Vec2& start, const Vec2& target) {
  start_ = start;
  target_ = target;
  seg_start_ = 0.0;
  coeffs_ = quintic_coeffs(start, Vec2::Zero(), Vec2::Zero(), target, 1.0);
}

Vec2 SwingTrajectory::position(double phase) const {
  const double u =
      std::clamp(phase, seg_start_, 1.0) - seg_start_;
  Vec2 p = Vec2::Zero();
  double uk = 1.0;
  for (int i = 0; i < 6; ++i) {
    p += uk * coeffs_.row(i).transpose();
    uk *= u;
  }
  return p;
}

Vec2 SwingTrajectory::velocity(double phase) const {
  const double u = std::clamp(phase, seg_start_, 1.0) - seg_start_;
  Vec2 v = Vec2::Zero();
  double uk = 1.0;
  for (int i = 1; i < 6; ++i) {
    v += i * uk * coeffs_.row(i).transpose();
    uk *= u;
  }
  return v;
}

void SwingTrajectory::retarget(const Vec2& new_target, double phase) {
  const double span = 1.0 - phase;
  if (span < 1e-3) {
    target_ = new_target;
    return;  // touchdown imminent, keep the current segment
  }
  const double u = std::clamp(phase, seg_start_, 1.0) - seg_start_;
  Vec2 p = Vec2::Zero(), v = Vec2::Zero(), a = Vec2::Zero();
  double uk = 1.0;
  for (int i = 0; i < 6; ++i) {
    p += uk * coeffs_.row(i).transpose();
    if (i >= 1) {
      double um = 1.0;
      for (int q = 0; q < i - 1; ++q) um *= u;
      v += i * um * coeffs_.row(i).transpose();
    }
    if (i >= 2) {
      double um = 1.0;
      for (int q = 0; q < i - 2; ++q) um *= u;
      a += i * (i - 1) * um * coeffs_.row(i).transpose();
    }
    uk *= u;
  }
  target_ = new_target;
  seg_start_ = phase;
  coeffs_ = quintic_coeffs(p, v, a, new_target, span);
}

Vec2 swing_trajectory(const Vec2& start, const Vec2& target, double phase) {
  SwingTrajectory traj;
  traj.reset(start, target);
  return traj.position(std::clamp(phase, 0.0, 1.0));
}

double swing_height(double phase, double apex) {
  const double f = std::clamp(phase, 0.0, 1.0);
  return 16.0 * apex * f * f * (1.0 - f) * (1.0 - f);
}

// --- scenario ---------------------------------------------------------------

Scenario Scenario::defaults() {
  Scenario s;
  SyntheticDepthSensor fwd;
  SyntheticDepthSensor bwd;
  bwd.mount = Vec3(-0.05, 0.0, 1.2);
  bwd.mount_yaw = M_PI;
  s.sensors = {fwd, bwd};
  return s;
}

Scenario load_scenario(std::istream& is) {
  Scenario s = Scenario::defaults();
  s.field.seed = 0;  // resolved after parsing: defaults to the scenario seed
  bool field_seed_set = false;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    auto need = [&](double& dst) {
      if (!(ls >> dst))
        throw ScenarioError("scenario line " + std::to_string(lineno) +
                            ": missing value for " + key);
    };
    double v = 0.0;
    if (key == "seed") {
      need(v);
      s.seed = static_cast<std::uint64_t>(v);
    } else if (key == "field_seed") {
      need(v);
      s.field.seed = static_cast<std::uint64_t>(v);
      field_seed_set = true;
    } else if (key == "goal_x") {
      need(s.goal_x);
    } else if (key == "goal_tolerance") {
      need(s.goal_tolerance);
    } else if (key == "timeout") {
      need(s.timeout);
    } else if (key == "replan_period") {
      need(s.replan_period);
    } else if (key == "perception_period") {
      need(s.perception_period);
    } else if (key == "replan_in_step") {
      need(v);
      s.replan_in_step = v != 0.0;
    } else if (key == "contact_patch") {
      need(v);
      s.contact_patch = v != 0.0;
    } else if (key == "swing_apex") {
      need(s.swing_apex);
    } else if (key == "density") {
      need(s.field.density);
    } else if (key == "stone_min") {
      need(s.field.stone_min);
    } else if (key == "stone_max") {
      need(s.field.stone_max);
    } else if (key == "gap_min") {
      need(s.field.gap_min);
    } else if (key == "gap_max") {
      need(s.field.gap_max);
    } else if (key == "chain_gap_min") {
      need(s.field.chain_gap_min);
    } else if (key == "chain_gap_max") {
      need(s.field.chain_gap_max);
    } else if (key == "chain_y_jitter") {
      need(s.field.chain_y_jitter);
    } else if (key == "field_x_min") {
      need(s.field.x_min);
    } else if (key == "field_x_max") {
      need(s.field.x_max);
    } else if (key == "field_y_min") {
      need(s.field.y_min);
    } else if (key == "field_y_max") {
      need(s.field.y_max);
    } else if (key == "start_radius") {
      need(s.field.start_radius);
    } else if (key == "height_jitter") {
      need(s.field.height_jitter);
    } else if (key == "sigma0") {
      need(v);
      s.sensor_model.sigma0 = v;
      for (auto& sensor : s.sensors) sensor.sigma0 = v;
    } else if (key == "dropout") {
      need(v);
      for (auto& sensor : s.sensors) sensor.dropout = v;
    } else if (key == "rays_azimuth") {
      need(v);
      for (auto& sensor : s.sensors) sensor.n_azimuth = static_cast<int>(v);
    } else if (key == "rays_range") {
      need(v);
      for (auto& sensor : s.sensors) sensor.n_range = static_cast<int>(v);
    } else if (key == "sensor_r_far") {
      need(v);
      for (auto& sensor : s.sensors) sensor.r_far = v;
    } else if (key == "push") {
      Disturbance push;
      if (!(ls >> push.time >> push.impulse.x() >> push.impulse.y()))
        throw ScenarioError("scenario line " + std::to_string(lineno) +
                            ": push needs <time> <ix> <iy>");
      s.pushes.push_back(push);
    } else if (key == "set") {
      std::string name;
      if (!(ls >> name))
        throw ScenarioError("scenario line " + std::to_string(lineno) +
                            ": set needs a key");
      PlannerConfig& c = s.planner;
      if (name == "N") {
        need(v);
        c.preview_steps = static_cast<int>(v);
      } else if (name == "T_nom") {
        need(c.T_nom);
      } else if (name == "T_min") {
        need(c.T_min);
      } else if (name == "T_max") {
        need(c.T_max);
      } else if (name == "L_min") {
        need(c.L_min);
      } else if (name == "L_max") {
        need(c.L_max);
      } else if (name == "W_min") {
        need(c.W_min);
      } else if (name == "W_max") {
        need(c.W_max);
      } else if (name == "delta_x") {
        need(c.delta_x);
      } else if (name == "delta_y") {
        need(c.delta_y);
      } else if (name == "w_z") {
        need(c.w_z_default);
      } else if (name == "w_sigma") {
        need(c.w_sigma);
      } else if (name == "w_x") {
        need(c.w_x);
      } else if (name == "w_y") {
        need(c.w_y);
      } else if (name == "p_x_nom") {
        need(c.p_x_nom);
      } else if (name == "p_y_nom") {
        need(c.p_y_nom);
      } else if (name == "M_big") {
        need(c.M_big);
      } else if (name == "max_regions") {
        need(v);
        c.max_regions = static_cast<int>(v);
      } else if (name == "viability") {
        need(v);
        c.viability_constraints = v != 0.0;
      } else if (name == "fix_first_duration") {
        need(v);
        c.fix_first_duration = v != 0.0;
      } else {
        throw ScenarioError("scenario line " + std::to_string(lineno) +
                            ": unknown planner key '" + name + "'");
      }
    } else {
      throw ScenarioError("scenario line " + std::to_string(lineno) +
                          ": unknown key '" + key + "'");
    }
  }
  if (!field_seed_set) s.field.seed = s.seed;
  std::sort(s.pushes.begin(), s.pushes.end(),
            [](const Disturbance& a, const Disturbance& b) {
              return a.time < b.time;
            });
  return s;
}

void save_scenario(const Scenario& s, std::ostream& os) {
  char buf[160];
  auto put = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "%s %.12g", key, v);
    os << buf << '\n';
  };
  os << "# stepstone scenario (template-dynamics simulation)\n";
  put("seed", static_cast<double>(s.seed));
  put("field_seed", static_cast<double>(s.field.seed));
  put("goal_x", s.goal_x);
  put("goal_tolerance", s.goal_tolerance);
  put("timeout", s.timeout);
  put("replan_period", s.replan_period);
  put("perception_period", s.perception_period);
  put("replan_in_step", s.replan_in_step ? 1 : 0);
  put("contact_patch", s.contact_patch ? 1 : 0);
  put("swing_apex", s.swing_apex);
  put("density", s.field.density);
  put("stone_min", s.field.stone_min);
  put("stone_max", s.field.stone_max);
  put("gap_min", s.field.gap_min);
  put("gap_max", s.field.gap_max);
  put("chain_gap_min", s.field.chain_gap_min);
  put("chain_gap_max", s.field.chain_gap_max);
  put("chain_y_jitter", s.field.chain_y_jitter);
  put("field_x_min", s.field.x_min);
  put("field_x_max", s.field.x_max);
  put("field_y_min", s.field.y_min);
  put("field_y_max", s.field.y_max);
  put("start_radius", s.field.start_radius);
  put("height_jitter", s.field.height_jitter);
  put("sigma0", s.sensor_model.sigma0);
  put("dropout", s.sensors.empty() ? 0.0 : s.sensors.front().dropout);
  for (const auto& push : s.pushes) {
    std::snprintf(buf, sizeof(buf), "push %.12g %.12g %.12g", push.time,
                  push.impulse.x(), push.impulse.y());
    os << buf << '\n';
  }
  const PlannerConfig def;
  const PlannerConfig& c = s.planner;
  auto put_set = [&](const char* key, double v) {
    std::snprintf(buf, sizeof(buf), "set %s %.12g", key, v);
    os << buf << '\n';
  };
  if (c.preview_steps != def.preview_steps) put_set("N", c.preview_steps);
  if (c.T_nom != def.T_nom) put_set("T_nom", c.T_nom);
  if (c.T_min != def.T_min) put_set("T_min", c.T_min);
  if (c.T_max != def.T_max) put_set("T_max", c.T_max);
  if (c.p_x_nom != def.p_x_nom) put_set("p_x_nom", c.p_x_nom);
  if (c.p_y_nom != def.p_y_nom) put_set("p_y_nom", c.p_y_nom);
  if (c.viability_constraints != def.viability_constraints)
    put_set("viability", c.viability_constraints ? 1 : 0);
  if (c.fix_first_duration != def.fix_first_duration)
    put_set("fix_first_duration", c.fix_first_duration ? 1 : 0);
}

// --- closed loop ------------------------------------------------------------

void TrajectoryLog::write_csv(std::ostream& os) const {
  os << "# template-dynamics walking simulation (kinematic swing, no "
        "full-body physics)\n";
  os << "time,side,px,py,xix,xiy,xi0x,xi0y,comx,comy,comvx,comvy,phase,"
        "T_current,planner_status,solve_us,transition\n";
  char buf[512];
  for (const auto& r : ticks) {
    std::snprintf(buf, sizeof(buf),
                  "%.9g,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,"
                  "%.9g,%.9g,%d,%ld,%d\n",
                  r.t, r.stance_side, r.p_world.x(), r.p_world.y(),
                  r.xi_world.x(), r.xi_world.y(), r.xi0_world.x(),
                  r.xi0_world.y(), r.com.x(), r.com.y(), r.com_vel.x(),
                  r.com_vel.y(), r.phase, r.T_current, r.planner_status,
                  r.solve_us, r.transition);
    os << buf;
  }
}

TrajectoryLog step_closed_loop(const Scenario& scenario) {
  const StoneField field = generate_field(scenario.field);
  std::mt19937_64 sensor_rng(scenario.seed ^ 0x9e3779b97f4a7c15ull);

  TrajectoryLog log;

  // stance starts on the right foot at the platform
  StancePose stance;
  stance.position = Vec3(0.0, -0.15, 0.0);
  StanceSide side = StanceSide::right;
  Vec2 swing_start_world(0.0, 0.15);

  const TemplateParams& tp = scenario.planner.template_params;
  const double lambda = tp.lambda();

  // start on the nominal periodic gait: the step-initial DCM offset of the
  // steady cycle, CoM trailing at the nominal forward velocity
  const double sigma_nom = scenario.planner.sigma_nom();
  const double off_x = scenario.planner.p_x_nom / (sigma_nom - 1.0);
  const double off_y = scenario.planner.p_y_nom / (sigma_nom + 1.0);
  const double v_nom = scenario.planner.p_x_nom / scenario.planner.T_nom;
  Vec2 xi_world = Vec2(stance.position.head<2>()) + Vec2(off_x, off_y);
  Vec2 xi0_world = xi_world;
  Vec2 com = xi_world - Vec2(v_nom / lambda, 0.0);
  const Vec2 com_start = com;

  double T_current = scenario.planner.T_nom;
  double T_planned_at_start = T_current;
  double t_elapsed = 0.0;
  double phase = 0.0;
  double step_start_time = 0.0;
  int step_index = 1;
  bool step_fallback = false;

  HeightMap map(scenario.perception);
  std::vector<ConvexRegion> regions;
  int stance_region_id = -1;

  SwingTrajectory swing;
  {
    const Vec2 start_local =
        swing_start_world - Vec2(stance.position.head<2>());
    const double ysign = side == StanceSide::right ? 1.0 : -1.0;
    swing.reset(start_local,
                start_local + Vec2(0.0, ysign * 0.0));
  }

  size_t next_push = 0;
  double next_perception = 0.0;
  double next_replan = 0.0;
  double last_solve_us = 0.0;
  int last_status = -1;

  const double dt = scenario.dt;
  const long max_ticks = static_cast<long>(scenario.timeout / dt) + 1;
  log.outcome = Outcome::timeout;

  auto stance_xy = [&]() { return Vec2(stance.position.head<2>()); };

  auto run_perception = [&]() {
    std::vector<PointCloud> clouds;
    for (const auto& sensor : scenario.sensors) {
      SyntheticDepthSensor tuned = sensor;
      tuned.sigma0 = sensor.sigma0;
      clouds.push_back(sense(field, stance, tuned, sensor_rng));
    }
    if (scenario.contact_patch)
      clouds.push_back(sample_contact_patch(field, stance, 0.18, 0.02));
    update(map, clouds, stance, scenario.sensor_model, scenario.perception);
    regions = extract_regions(map, scenario.regions);
    stance_region_id = -1;
    for (const auto& region : regions) {
      if (region.contains(Vec2::Zero(), 1e-9)) {
        stance_region_id = region.id;
        break;
      }
    }
    if (stance_region_id < 0 && !regions.empty()) {
      double best = 1e30;
      for (const auto& region : regions) {
        const double d = region.vertices.centroid().norm();
        if (d < best) {
          best = d;
          stance_region_id = region.id;
        }
      }
    }
  };

  long tick = 0;
  for (; tick < max_ticks; ++tick) {
    const double t = tick * dt;

    while (next_push < scenario.pushes.size() &&
           scenario.pushes[next_push].time <= t + 0.5 * dt) {
      xi_world += scenario.pushes[next_push].impulse;
      ++next_push;
    }

    if (t + 1e-9 >= next_perception) {
      run_perception();
      next_perception = t + scenario.perception_period;
    }

    const bool step_start_plan = t_elapsed < 0.5 * dt;
    if (t + 1e-9 >= next_replan && (scenario.replan_in_step || step_start_plan)) {
      next_replan = t + scenario.replan_period;
      const bool can_replan =
          t_elapsed + scenario.planner.replan_T_floor < T_current - 1e-9;
      if (!regions.empty() && can_replan) {
        const Vec2 goal_local(scenario.goal_x - stance_xy().x(),
                              0.0 - stance_xy().y());
        const Vec2 com_vel = lambda * (xi_world - com);
        std::vector<ConvexRegion> selected = select_regions(
            regions, stance_region_id, goal_local, com_vel.x(),
            scenario.planner.max_regions, scenario.regions);

        PlannerConfig cfg = scenario.planner;
        cfg.z_goal = goal_local;
        DcmState state;
        state.xi = xi_world - stance_xy();
        state.xi0 = xi0_world - stance_xy();
        state.p = Vec2::Zero();
        state.stance_side = side;
        state.t_elapsed = t_elapsed;
        state.T_current = T_current;
        const Vec2 xi_meas = xi_world - stance_xy();

        const PlannerSolution sol = replan(state, selected, cfg, xi_meas);
        last_solve_us = static_cast<double>(sol.stats.wall_time_us);
        last_status = static_cast<int>(sol.status);
        log.plans.push_back({t, t_elapsed, last_status, sol.sigma1, sol.T1,
                             sol.stats.wall_time_us, sol.stats.nodes});
        if (sol.feasible()) {
          T_current = sol.T1;
          swing.retarget(sol.footholds.front(), phase);
          if (step_start_plan) {
            T_planned_at_start = sol.T1;
            step_fallback = false;
          }
        } else {
          // capture-style stop: shortest admissible remaining duration,
          // foothold at the projected touchdown DCM clipped into the
          // nearest region and the stride box
          const double T_fb = std::clamp(
              t_elapsed + 2.0 * scenario.planner.replan_T_floor,
              scenario.planner.T_min, scenario.planner.T_max);
          const Vec2 xi_local = xi_world - stance_xy();
          Vec2 target = xi_local * std::exp(lambda * (T_fb - t_elapsed));
          if (!selected.empty()) {
            double best = 1e30;
            Vec2 best_point = target;
            for (const auto& region : selected) {
              // projection onto the convex polygon
              Vec2 proj = target;
              if (!region.contains(target, 1e-12)) {
                double dmin = 1e30;
                const auto& verts = region.vertices.vertices;
                for (size_t i = 0; i < verts.size(); ++i) {
                  const Vec2& a = verts[i];
                  const Vec2& b = verts[(i + 1) % verts.size()];
                  const Vec2 e = b - a;
                  const double len2 = std::max(e.squaredNorm(), 1e-18);
                  const double tau =
                      std::clamp((target - a).dot(e) / len2, 0.0, 1.0);
                  const Vec2 cand = a + tau * e;
                  const double d = (cand - target).norm();
                  if (d < dmin) {
                    dmin = d;
                    proj = cand;
                  }
                }
              }
              const double d = (proj - target).norm() +
                               0.1 * region.vertices.centroid().norm();
              if (d < best) {
                best = d;
                best_point = proj;
              }
            }
            target = best_point;
          }
          const double ysign = side == StanceSide::right ? 1.0 : -1.0;
          target.x() = std::clamp(target.x(), scenario.planner.L_min,
                                  scenario.planner.L_max);
          target.y() = ysign * std::clamp(ysign * target.y(),
                                          scenario.planner.W_min,
                                          scenario.planner.W_max);
          T_current = T_fb;
          swing.retarget(target, phase);
          step_fallback = true;
        }
      }
    }

    // closed-form DCM integration and CoM reconstruction
    xi_world = stance_xy() + (xi_world - stance_xy()) * std::exp(lambda * dt);
    com += dt * lambda * (xi_world - com);
    const Vec2 com_vel = lambda * (xi_world - com);

    phase += dt / T_current;
    t_elapsed += dt;

    TickRow row;
    row.t = t;
    row.stance_side = stance_sign(side);
    row.p_world = stance_xy();
    row.xi_world = xi_world;
    row.xi0_world = xi0_world;
    row.com = com;
    row.com_vel = com_vel;
    row.phase = std::min(phase, 1.0);
    row.T_current = T_current;
    row.planner_status = last_status;
    row.solve_us = static_cast<long>(last_solve_us);
    log.ticks.push_back(row);

    if ((xi_world - stance_xy()).norm() > 3.0) {
      log.outcome = Outcome::fall;
      log.fall_position = xi_world;
      break;
    }

    if (phase >= 1.0 - 1e-12) {
      // touchdown
      const Vec2 q_local = swing.target();
      const Vec2 q_world = stance_xy() + q_local;
      const int stone = field.stone_at(q_world);
      log.ticks.back().transition = 1;

      if (stone < 0) {
        log.outcome = Outcome::fall;
        log.fall_position = q_world;
        break;
      }

      StepRecord rec;
      rec.index = step_index;
      rec.t_start = step_start_time;
      rec.t_touchdown = t;
      rec.position = q_world;
      rec.side = stance_sign(opposite(side));
      rec.T_planned_at_start = T_planned_at_start;
      rec.T_final = t - step_start_time + dt;
      rec.fallback = step_fallback;
      log.steps.push_back(rec);

      swing_start_world = stance_xy();
      stance.position = Vec3(q_world.x(), q_world.y(), field.stones[stone].height);
      side = opposite(side);
      xi0_world = xi_world;
      ++step_index;
      t_elapsed = 0.0;
      phase = 0.0;
      T_current = scenario.planner.T_nom;
      T_planned_at_start = T_current;
      step_start_time = t + dt;
      step_fallback = false;
      next_replan = t + dt;      // plan at the new step start
      next_perception = t + dt;  // perception at the new step start

      const Vec2 start_local = swing_start_world - stance_xy();
      const double ysign = side == StanceSide::right ? 1.0 : -1.0;
      swing.reset(start_local,
                  start_local + Vec2(scenario.planner.p_x_nom,
                                     ysign * scenario.planner.p_y_nom));

      if (stance_xy().x() >= scenario.goal_x - scenario.goal_tolerance) {
        log.outcome = Outcome::goal_reached;
        break;
      }
    }
  }

  log.duration = log.ticks.empty() ? 0.0 : log.ticks.back().t + dt;
  if (log.duration > 0.0)
    log.mean_x_velocity = (com.x() - com_start.x()) / log.duration;
  return log;
}

}  // namespace stepstone
