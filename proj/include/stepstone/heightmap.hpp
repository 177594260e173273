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

// Probabilistic 2.5D elevation grid maintained in the stance-foot frame.
// Each cell holds a Gaussian height belief that is resampled under stance
// frame changes, refined against incoming point clouds by a planar ICP
// step, fused with precision-weighted observations, and inflated over time
// when unobserved.

#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "stepstone/common.hpp"

namespace stepstone {

struct SensorModel {
  double sigma0{0.01};    // baseline noise at unit distance, perpendicular view
  double epsilon{0.05};   // grazing-incidence floor for cos(theta)
  double max_range{6.0};
};

struct PointCloud {
  enum class Frame { camera, stance };
  std::vector<Vec3> points;
  Frame frame{Frame::stance};
  Vec3 origin{Vec3::Zero()};  // sensor position expressed in `frame`
};

struct HeightCell {
  double mean{0.0};
  double variance{0.0};
  double obs_count{0.0};     // decayable observation count
  int transform_count{0};    // resampling operations since last observation
  long last_obs_frame{-1};

  bool observed() const { return obs_count > 0.0; }
  void clear() { *this = HeightCell{}; }
};

struct PerceptionConfig {
  int rows{100};
  int cols{100};
  double resolution{0.02};

  double variance_floor{1e-6};
  double variance_cap{1.0};

  // frame motion compensation
  double alpha_sigma{1.1};        // variance inflation per resampling
  double alpha_n{0.9};            // observation count decay per resampling
  int transform_count_limit{20};
  long age_limit{40};             // frames since last observation
  double motion_thresh_trans{0.005};
  double motion_thresh_rot{1.0 * M_PI / 180.0};

  // ICP registration
  int icp_min_prior_cells{200};
  double icp_corr_radius{0.06};
  double icp_height_gate{0.05};
  int icp_max_iters{15};
  double icp_conv_tol{1e-6};
  double icp_safety_cap_trans{0.1};
  double icp_safety_cap_rot{5.0 * M_PI / 180.0};
  int icp_max_points{1500};  // stride-subsampled above this

  // temporal uncertainty decay
  double gamma0{1.02};
  double d_ref{0.1};
};

/// Fixed-size elevation grid. Cell (r,s) is centered at
/// origin_offset + resolution * (r,s) in the stance-foot frame; the grid is
/// constructed centered on the stance foot.
class HeightMap {
 public:
  explicit HeightMap(const PerceptionConfig& cfg = PerceptionConfig{});

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double resolution() const { return resolution_; }
  const Vec2& origin_offset() const { return origin_offset_; }
  const PerceptionConfig& config() const { return config_; }

  HeightCell& cell(int r, int s) { return cells_[r * cols_ + s]; }
  const HeightCell& cell(int r, int s) const { return cells_[r * cols_ + s]; }

  Vec2 cell_center(int r, int s) const {
    return origin_offset_ + resolution_ * Vec2(r, s);
  }
  /// Nearest cell index for a planar point, or nullopt if off the grid.
  std::optional<std::pair<int, int>> cell_index(const Vec2& p) const;

  const StancePose& frame_pose() const { return frame_pose_; }
  void set_frame_pose(const StancePose& pose) {
    frame_pose_ = pose;
    has_pose_ = true;
  }
  bool has_pose() const { return has_pose_; }

  long frame_index() const { return frame_index_; }
  void advance_frame() { ++frame_index_; }

  int observed_count() const;

 private:
  int rows_, cols_;
  double resolution_;
  Vec2 origin_offset_;
  std::vector<HeightCell> cells_;
  PerceptionConfig config_;
  StancePose frame_pose_{};
  bool has_pose_{false};
  long frame_index_{0};
};

/// Maps a planar point from an old stance frame into a new one. Heights
/// carry over unchanged; yaw is the only rotation tracked.
Vec2 transform_cell(const Vec2& p_old, const StancePose& old_pose,
                    const StancePose& new_pose);

/// Re-bins every observed cell into the new stance frame. Skipped entirely
/// (except for the pose update) when the inter-frame motion is below the
/// configured thresholds. Colliding cells keep the greatest height; moved
/// cells receive the resampling penalties; stale cells are cleared.
void frame_motion_compensation(HeightMap& map, const StancePose& new_pose,
                               const PerceptionConfig& cfg);

/// Range/incidence observation variance for a point in the camera frame.
double observation_variance(const Vec3& point, const SensorModel& model);

/// Precision-weighted per-cell aggregation of a stance-frame cloud followed
/// by a Kalman-style fusion with each cell prior. Fresh observations reset
/// the transform count.
void fuse_points(HeightMap& map, const PointCloud& cloud,
                 const SensorModel& model);

/// Variance growth for cells not observed this frame, at a rate that
/// increases with the stance foot's inter-frame planar displacement.
void temporal_decay(HeightMap& map, double planar_displacement,
                    const PerceptionConfig& cfg);

/// Clears cells whose transform count or age exceeds the configured limits.
void clear_stale(HeightMap& map, const PerceptionConfig& cfg);

struct IcpResult {
  double dx{0.0}, dy{0.0}, dyaw{0.0}, dz{0.0};
  bool accepted{false};
  bool degenerate{false};
  int iterations{0};
  int pairs{0};

  bool is_identity() const {
    return dx == 0.0 && dy == 0.0 && dyaw == 0.0 && dz == 0.0;
  }
};

/// Planar 4-DoF (x, y, yaw, height offset) alignment of a stance-frame
/// cloud against the observed cells of the map. Correspondences are
/// gated by distance and height difference; the accumulated correction is
/// accepted only below the safety caps.
IcpResult icp_refine(const PointCloud& cloud, const HeightMap& map,
                     const PerceptionConfig& cfg);

/// Applies an ICP correction to a stance-frame cloud.
PointCloud apply_icp(const PointCloud& cloud, const IcpResult& result);

/// Per-frame update: frame motion compensation, ICP refinement, stale-cell
/// clearing, Bayesian fusion, temporal decay, in that order. Clouds must be
/// in the stance frame.
void update(HeightMap& map, const std::vector<PointCloud>& clouds,
            const StancePose& new_pose, const SensorModel& model,
            const PerceptionConfig& cfg);

/// Plain-text grid dump: header `rows cols resolution origin_x origin_y`,
/// then one line per row of `mean:variance:obs_count` triples with `nan`
/// for unobserved cells.
void dump_heightmap(const HeightMap& map, std::ostream& os);
HeightMap load_heightmap(std::istream& is, const PerceptionConfig& cfg = {});

/// Reads a point-cloud replay file (`x y z frame_id` per line) and groups
/// points by frame id, in first-appearance order.
std::vector<PointCloud> load_cloud_replay(std::istream& is);

}  // namespace stepstone
