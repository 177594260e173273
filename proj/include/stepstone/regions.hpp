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

// Steppable-region extraction: threshold the heightmap, trace component
// boundaries, simplify, convexify, convert to half-spaces, and select a
// planner-sized subset with a velocity-adaptive beam mask.

#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "stepstone/common.hpp"
#include "stepstone/heightmap.hpp"

namespace stepstone {

/// Simple polygon with counter-clockwise vertex order.
struct Polygon {
  std::vector<Vec2> vertices;

  double area() const;          // signed (positive for CCW)
  Vec2 centroid() const;
  bool contains(const Vec2& p) const;  // ray casting, boundary-inclusive
  void make_ccw();
};

/// Convex region in half-space form {p | A p <= b} with unit outward
/// normals, one row per edge, plus its vertex polygon.
struct ConvexRegion {
  int id{0};
  Eigen::Matrix<double, Eigen::Dynamic, 2> A;
  Eigen::VectorXd b;
  Polygon vertices;
  double z_mean{0.0};

  int edges() const { return static_cast<int>(A.rows()); }
  bool contains(const Vec2& p, double tol = 1e-9) const {
    return ((A * p - b).array() <= tol).all();
  }
};

struct BeamMask {
  Vec2 anchor{Vec2::Zero()};  // stance foot
  double heading{0.0};        // walking direction
  double center_offset{0.0};  // along heading, from anchor
  double length{1.8};
  double width{1.0};

  Polygon corners() const;
};

struct RegionExtractionConfig {
  double band_lo{-0.03};
  double band_hi{0.03};
  double min_area{0.012};
  double rdp_tolerance_cells{1.5};  // multiplied by the grid resolution
  int max_edges{8};
  int max_regions{8};

  // velocity-adaptive beam selection
  double beam_length{1.8};
  double beam_width{1.0};
  double forward_shift_fraction{0.4};
  double forward_shift_cap{0.5};
  double back_extension{0.4};
  double low_speed_thresh{0.2};
  double min_overlap{0.004};
};

/// Binary-mask connected components (8-connectivity) of observed cells whose
/// mean lies within the height band, traced to outer boundary polygons and
/// ordered by area descending. Components smaller than min_area are dropped.
std::vector<Polygon> extract_contours(const HeightMap& map, double band_lo,
                                      double band_hi, double min_area);

/// Ramer-Douglas-Peucker simplification of a closed polygon. The tolerance
/// doubles until the result has at most max_edges vertices. Degenerate
/// results (< 3 vertices) come back empty.
Polygon rdp_simplify(const Polygon& poly, double tolerance, int max_edges);

/// Convex hull of the vertex set (Sklansky-style scan over the
/// lexicographically sorted points). Collinear-only input comes back empty.
Polygon convex_hull(const Polygon& poly);

/// Half-space description of a convex CCW polygon. Consecutive duplicate
/// vertices are merged before conversion.
ConvexRegion to_halfspaces(const Polygon& hull);

/// Sutherland-Hodgman clipping of a subject polygon by a convex polygon.
Polygon clip_polygon(const Polygon& subject, const Polygon& clip);

/// Keeps at most max_regions regions: all of them if they already fit,
/// otherwise the stance region plus the beam-overlapping regions nearest to
/// the stance foot. The beam shifts forward with the goal distance and
/// extends backward at low forward speed.
std::vector<ConvexRegion> select_regions(const std::vector<ConvexRegion>& regions,
                                         int stance_region_id, const Vec2& goal,
                                         double forward_speed,
                                         int max_regions,
                                         const RegionExtractionConfig& cfg);

/// Full pipeline: contours -> RDP -> hull -> half-spaces. Region ids are
/// assigned in area-descending order; z_mean averages the component cells.
std::vector<ConvexRegion> extract_regions(const HeightMap& map,
                                          const RegionExtractionConfig& cfg);

void write_regions(const std::vector<ConvexRegion>& regions, std::ostream& os);
std::vector<ConvexRegion> read_regions(std::istream& is);

}  // namespace stepstone
