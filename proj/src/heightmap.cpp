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

#include "stepstone/heightmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <string>

namespace stepstone {

namespace {

double wrap_angle(double a) {
  while (a > M_PI) a -= 2.0 * M_PI;
  while (a < -M_PI) a += 2.0 * M_PI;
  return a;
}

bool finite_point(const Vec3& p) {
  return std::isfinite(p.x()) && std::isfinite(p.y()) && std::isfinite(p.z());
}

}  // namespace

HeightMap::HeightMap(const PerceptionConfig& cfg)
    : rows_(cfg.rows),
      cols_(cfg.cols),
      resolution_(cfg.resolution),
      cells_(static_cast<size_t>(cfg.rows) * cfg.cols),
      config_(cfg) {
  origin_offset_ =
      -resolution_ * Vec2(0.5 * (rows_ - 1), 0.5 * (cols_ - 1));
}

std::optional<std::pair<int, int>> HeightMap::cell_index(const Vec2& p) const {
  const Vec2 rel = (p - origin_offset_) / resolution_;
  const int r = static_cast<int>(std::lround(rel.x()));
  const int s = static_cast<int>(std::lround(rel.y()));
  if (r < 0 || r >= rows_ || s < 0 || s >= cols_) return std::nullopt;
  return std::make_pair(r, s);
}

int HeightMap::observed_count() const {
  int n = 0;
  for (const auto& c : cells_)
    if (c.observed()) ++n;
  return n;
}

Vec2 transform_cell(const Vec2& p_old, const StancePose& old_pose,
                    const StancePose& new_pose) {
  const Eigen::Matrix2d r_old = yaw_rotation(old_pose.yaw);
  const Eigen::Matrix2d r_new = yaw_rotation(new_pose.yaw);
  const Vec2 t_old = old_pose.position.head<2>();
  const Vec2 t_new = new_pose.position.head<2>();
  return r_new.transpose() * (r_old * p_old + t_old - t_new);
}

void frame_motion_compensation(HeightMap& map, const StancePose& new_pose,
                               const PerceptionConfig& cfg) {
  const StancePose old_pose = map.frame_pose();
  const double trans =
      (new_pose.position.head<2>() - old_pose.position.head<2>()).norm();
  const double rot = std::abs(wrap_angle(new_pose.yaw - old_pose.yaw));
  if (trans < cfg.motion_thresh_trans && rot < cfg.motion_thresh_rot) {
    map.set_frame_pose(new_pose);
    return;
  }

  std::vector<HeightCell> moved(static_cast<size_t>(map.rows()) * map.cols());
  for (int r = 0; r < map.rows(); ++r) {
    for (int s = 0; s < map.cols(); ++s) {
      HeightCell c = map.cell(r, s);
      if (!c.observed()) continue;
      const Vec2 p_new = transform_cell(map.cell_center(r, s), old_pose, new_pose);
      const auto idx = map.cell_index(p_new);
      if (!idx) continue;  // off the grid

      c.variance = std::min(c.variance * cfg.alpha_sigma, cfg.variance_cap);
      c.obs_count *= cfg.alpha_n;
      c.transform_count += 1;
      if (c.transform_count > cfg.transform_count_limit) continue;
      if (map.frame_index() - c.last_obs_frame > cfg.age_limit) continue;

      HeightCell& target = moved[idx->first * map.cols() + idx->second];
      if (!target.observed() || c.mean > target.mean) target = c;
    }
  }
  for (int r = 0; r < map.rows(); ++r)
    for (int s = 0; s < map.cols(); ++s)
      map.cell(r, s) = moved[r * map.cols() + s];
  map.set_frame_pose(new_pose);
}

double observation_variance(const Vec3& point, const SensorModel& model) {
  const double d = point.norm();
  if (d <= 0.0) {
    throw std::invalid_argument("observation_variance: zero-length point");
  }
  const double cos_theta = std::abs(point.z()) / d;
  return model.sigma0 * model.sigma0 * d * d /
         std::max(cos_theta, model.epsilon);
}

void fuse_points(HeightMap& map, const PointCloud& cloud,
                 const SensorModel& model) {
  if (cloud.frame != PointCloud::Frame::stance) {
    throw ScenarioError("fuse_points: cloud must be in the stance frame");
  }
  const double floor = map.config().variance_floor;

  struct Acc {
    double sum_w{0.0};
    double sum_wz{0.0};
  };
  std::map<std::pair<int, int>, Acc> bins;
  for (const auto& p : cloud.points) {
    if (!finite_point(p)) continue;
    const auto idx = map.cell_index(p.head<2>());
    if (!idx) continue;
    const Vec3 rel = p - cloud.origin;
    if (rel.norm() <= 0.0) continue;
    const double var = observation_variance(rel, model);
    const double w = 1.0 / var;
    auto& acc = bins[*idx];
    acc.sum_w += w;
    acc.sum_wz += w * p.z();
  }

  for (const auto& [idx, acc] : bins) {
    const double mu_agg = acc.sum_wz / acc.sum_w;
    const double var_agg = std::max(1.0 / acc.sum_w, floor);
    HeightCell& c = map.cell(idx.first, idx.second);
    if (!c.observed()) {
      c.mean = mu_agg;
      c.variance = var_agg;
      c.obs_count = 1.0;
    } else {
      const double gain = c.variance / (c.variance + var_agg);
      c.mean += gain * (mu_agg - c.mean);
      c.variance = std::max((1.0 - gain) * c.variance, floor);
      c.obs_count += 1.0;
    }
    c.transform_count = 0;
    c.last_obs_frame = map.frame_index();
  }
}

void temporal_decay(HeightMap& map, double planar_displacement,
                    const PerceptionConfig& cfg) {
  const double gamma_eff =
      1.0 + (cfg.gamma0 - 1.0) * (1.0 + planar_displacement / cfg.d_ref);
  for (int r = 0; r < map.rows(); ++r) {
    for (int s = 0; s < map.cols(); ++s) {
      HeightCell& c = map.cell(r, s);
      if (!c.observed()) continue;
      if (c.last_obs_frame == map.frame_index()) continue;
      c.variance = std::min(c.variance * gamma_eff, cfg.variance_cap);
    }
  }
}

void clear_stale(HeightMap& map, const PerceptionConfig& cfg) {
  for (int r = 0; r < map.rows(); ++r) {
    for (int s = 0; s < map.cols(); ++s) {
      HeightCell& c = map.cell(r, s);
      if (!c.observed()) continue;
      if (c.transform_count > cfg.transform_count_limit ||
          map.frame_index() - c.last_obs_frame > cfg.age_limit) {
        c.clear();
      }
    }
  }
}

namespace {

struct Correspondence {
  Vec2 p;
  Vec2 q;
  double pz, qz;
};

int collect_correspondences(const std::vector<Vec3>& points,
                            const HeightMap& map, const PerceptionConfig& cfg,
                            std::vector<Correspondence>& out) {
  out.clear();
  const int win = static_cast<int>(std::ceil(cfg.icp_corr_radius /
                                             map.resolution()));
  const double r2max = cfg.icp_corr_radius * cfg.icp_corr_radius;
  for (const auto& p : points) {
    const auto idx = map.cell_index(p.head<2>());
    if (!idx) continue;
    double best_r2 = r2max;
    const HeightCell* best = nullptr;
    Vec2 best_center;
    for (int r = std::max(0, idx->first - win);
         r <= std::min(map.rows() - 1, idx->first + win); ++r) {
      for (int s = std::max(0, idx->second - win);
           s <= std::min(map.cols() - 1, idx->second + win); ++s) {
        const HeightCell& c = map.cell(r, s);
        if (!c.observed()) continue;
        if (std::abs(c.mean - p.z()) >= cfg.icp_height_gate) continue;
        const Vec2 center = map.cell_center(r, s);
        const double r2 = (center - p.head<2>()).squaredNorm();
        if (r2 <= best_r2) {
          best_r2 = r2;
          best = &c;
          best_center = center;
        }
      }
    }
    if (best) out.push_back({p.head<2>(), best_center, p.z(), best->mean});
  }
  return static_cast<int>(out.size());
}

}  // namespace

IcpResult icp_refine(const PointCloud& cloud, const HeightMap& map,
                     const PerceptionConfig& cfg) {
  IcpResult result;
  if (map.observed_count() < cfg.icp_min_prior_cells) return result;

  double yaw = 0.0, dz = 0.0;
  Vec2 t = Vec2::Zero();
  const size_t stride =
      std::max<size_t>(1, cloud.points.size() /
                              std::max(1, cfg.icp_max_points));
  std::vector<Vec3> sample;
  sample.reserve(cloud.points.size() / stride + 1);
  for (size_t i = 0; i < cloud.points.size(); i += stride)
    sample.push_back(cloud.points[i]);
  std::vector<Vec3> work(sample.size());
  std::vector<Correspondence> corr;

  for (int it = 0; it < cfg.icp_max_iters; ++it) {
    const Eigen::Matrix2d rot = yaw_rotation(yaw);
    for (size_t i = 0; i < sample.size(); ++i) {
      const Vec3& p = sample[i];
      work[i].head<2>() = rot * p.head<2>() + t;
      work[i].z() = p.z() + dz;
    }
    result.iterations = it + 1;
    result.pairs = collect_correspondences(work, map, cfg, corr);
    if (result.pairs < 3) {
      result.degenerate = true;
      return IcpResult{0.0, 0.0, 0.0, 0.0, false, true, result.iterations,
                       result.pairs};
    }

    Vec2 pc = Vec2::Zero(), qc = Vec2::Zero();
    double zp = 0.0, zq = 0.0;
    for (const auto& c : corr) {
      pc += c.p;
      qc += c.q;
      zp += c.pz;
      zq += c.qz;
    }
    const double n = static_cast<double>(corr.size());
    pc /= n;
    qc /= n;
    double sdot = 0.0, scross = 0.0;
    for (const auto& c : corr) {
      const Vec2 a = c.p - pc, b = c.q - qc;
      sdot += a.dot(b);
      scross += a.x() * b.y() - a.y() * b.x();
    }
    const double dtheta = std::atan2(scross, sdot);
    const Eigen::Matrix2d rinc = yaw_rotation(dtheta);
    const Vec2 tinc = qc - rinc * pc;
    const double dzinc = (zq - zp) / n;

    yaw = wrap_angle(dtheta + yaw);
    t = rinc * t + tinc;
    dz += dzinc;

    if (tinc.norm() + std::abs(dtheta) + std::abs(dzinc) < cfg.icp_conv_tol)
      break;
  }

  if (t.norm() > cfg.icp_safety_cap_trans ||
      std::abs(yaw) > cfg.icp_safety_cap_rot) {
    return IcpResult{0.0, 0.0, 0.0, 0.0, false, false, result.iterations,
                     result.pairs};
  }
  result.dx = t.x();
  result.dy = t.y();
  result.dyaw = yaw;
  result.dz = dz;
  result.accepted = true;
  return result;
}

PointCloud apply_icp(const PointCloud& cloud, const IcpResult& r) {
  PointCloud out = cloud;
  const Eigen::Matrix2d rot = yaw_rotation(r.dyaw);
  const Vec2 t(r.dx, r.dy);
  for (auto& p : out.points) {
    p.head<2>() = rot * p.head<2>() + t;
    p.z() += r.dz;
  }
  out.origin.head<2>() = rot * out.origin.head<2>() + t;
  out.origin.z() += r.dz;
  return out;
}

void update(HeightMap& map, const std::vector<PointCloud>& clouds,
            const StancePose& new_pose, const SensorModel& model,
            const PerceptionConfig& cfg) {
  map.advance_frame();

  double displacement = 0.0;
  if (map.has_pose()) {
    displacement =
        (new_pose.position.head<2>() - map.frame_pose().position.head<2>())
            .norm();
    frame_motion_compensation(map, new_pose, cfg);
  } else {
    map.set_frame_pose(new_pose);
  }

  clear_stale(map, cfg);

  // One registration over the merged frame, then per-cloud fusion so each
  // cloud keeps its own sensor origin for the observation weights.
  PointCloud merged;
  merged.frame = PointCloud::Frame::stance;
  for (const auto& cloud : clouds) {
    if (cloud.frame != PointCloud::Frame::stance) {
      throw ScenarioError("update: clouds must be in the stance frame");
    }
    merged.points.insert(merged.points.end(), cloud.points.begin(),
                         cloud.points.end());
  }
  IcpResult icp;
  if (!merged.points.empty()) icp = icp_refine(merged, map, cfg);

  for (const auto& cloud : clouds) {
    if (cloud.points.empty()) continue;
    fuse_points(map, icp.accepted ? apply_icp(cloud, icp) : cloud, model);
  }

  temporal_decay(map, displacement, cfg);
}

void dump_heightmap(const HeightMap& map, std::ostream& os) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%d %d %.9g %.9g %.9g", map.rows(),
                map.cols(), map.resolution(), map.origin_offset().x(),
                map.origin_offset().y());
  os << buf << '\n';
  for (int r = 0; r < map.rows(); ++r) {
    for (int s = 0; s < map.cols(); ++s) {
      const HeightCell& c = map.cell(r, s);
      if (s > 0) os << ' ';
      if (!c.observed()) {
        os << "nan";
      } else {
        std::snprintf(buf, sizeof(buf), "%.9g:%.9g:%.9g", c.mean, c.variance,
                      c.obs_count);
        os << buf;
      }
    }
    os << '\n';
  }
}

HeightMap load_heightmap(std::istream& is, const PerceptionConfig& cfg) {
  PerceptionConfig c = cfg;
  Vec2 origin;
  if (!(is >> c.rows >> c.cols >> c.resolution >> origin.x() >> origin.y())) {
    throw ScenarioError("load_heightmap: malformed header");
  }
  HeightMap map(c);
  for (int r = 0; r < map.rows(); ++r) {
    for (int s = 0; s < map.cols(); ++s) {
      std::string tok;
      if (!(is >> tok)) throw ScenarioError("load_heightmap: truncated grid");
      if (tok == "nan") continue;
      HeightCell& cell = map.cell(r, s);
      if (std::sscanf(tok.c_str(), "%lf:%lf:%lf", &cell.mean, &cell.variance,
                      &cell.obs_count) != 3) {
        throw ScenarioError("load_heightmap: malformed cell '" + tok + "'");
      }
      cell.last_obs_frame = 0;
    }
  }
  return map;
}

std::vector<PointCloud> load_cloud_replay(std::istream& is) {
  std::vector<PointCloud> clouds;
  std::map<long, size_t> frame_slot;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    Vec3 p;
    long frame_id;
    if (!(ls >> p.x() >> p.y() >> p.z() >> frame_id)) {
      throw ScenarioError("load_cloud_replay: malformed line '" + line + "'");
    }
    auto it = frame_slot.find(frame_id);
    if (it == frame_slot.end()) {
      it = frame_slot.emplace(frame_id, clouds.size()).first;
      clouds.emplace_back();
      clouds.back().frame = PointCloud::Frame::stance;
    }
    clouds[it->second].points.push_back(p);
  }
  return clouds;
}

}  // namespace stepstone
