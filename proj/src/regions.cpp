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

#include "stepstone/regions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <string>

namespace stepstone {

double Polygon::area() const {
  double a = 0.0;
  const size_t n = vertices.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& u = vertices[i];
    const Vec2& v = vertices[(i + 1) % n];
    a += u.x() * v.y() - v.x() * u.y();
  }
  return 0.5 * a;
}

Vec2 Polygon::centroid() const {
  const double a = area();
  const size_t n = vertices.size();
  if (n == 0) return Vec2::Zero();
  if (std::abs(a) < 1e-12) {
    Vec2 c = Vec2::Zero();
    for (const auto& v : vertices) c += v;
    return c / static_cast<double>(n);
  }
  Vec2 c = Vec2::Zero();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& u = vertices[i];
    const Vec2& v = vertices[(i + 1) % n];
    const double w = u.x() * v.y() - v.x() * u.y();
    c += w * (u + v);
  }
  return c / (6.0 * a);
}

bool Polygon::contains(const Vec2& p) const {
  const size_t n = vertices.size();
  if (n < 3) return false;
  bool inside = false;
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = vertices[j];
    const Vec2& b = vertices[i];
    // on-segment check
    const Vec2 e = b - a;
    const double cross = e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x());
    if (std::abs(cross) < 1e-12 && (p - a).dot(p - b) <= 1e-12) return true;
    if ((b.y() > p.y()) != (a.y() > p.y())) {
      const double xint =
          b.x() + (p.y() - b.y()) * (a.x() - b.x()) / (a.y() - b.y());
      if (p.x() < xint) inside = !inside;
    }
  }
  return inside;
}

void Polygon::make_ccw() {
  if (area() < 0.0) std::reverse(vertices.begin(), vertices.end());
}

Polygon BeamMask::corners() const {
  const Vec2 dir(std::cos(heading), std::sin(heading));
  const Vec2 lat(-dir.y(), dir.x());
  const Vec2 c = anchor + center_offset * dir;
  Polygon poly;
  poly.vertices = {c - 0.5 * length * dir - 0.5 * width * lat,
                   c + 0.5 * length * dir - 0.5 * width * lat,
                   c + 0.5 * length * dir + 0.5 * width * lat,
                   c - 0.5 * length * dir + 0.5 * width * lat};
  return poly;
}

namespace {

struct Component {
  std::vector<std::pair<int, int>> cells;
  Polygon boundary;   // meters, CCW
  double area_m2{0.0};
  double z_mean{0.0};
};

// Walks the cell-corner boundary of one connected component. Directed edges
// keep the interior on the left, so the outer loop comes out CCW. Corner
// pinches from diagonal connectivity are resolved by preferring the
// sharpest left turn.
Polygon trace_boundary(const std::vector<std::pair<int, int>>& cells,
                       const HeightMap& map,
                       const std::vector<char>& in_comp) {
  const int cols = map.cols();
  auto member = [&](int r, int s) {
    if (r < 0 || r >= map.rows() || s < 0 || s >= cols) return false;
    return in_comp[r * cols + s] != 0;
  };

  // corner (i,j) has integer key i * (cols+1) + j
  struct Edge {
    int from, to;
    bool used{false};
  };
  std::vector<Edge> edges;
  std::multimap<int, int> outgoing;  // corner key -> edge index
  auto corner_key = [&](int i, int j) { return i * (cols + 2) + j; };
  auto add_edge = [&](int i0, int j0, int i1, int j1) {
    outgoing.emplace(corner_key(i0, j0), static_cast<int>(edges.size()));
    edges.push_back({corner_key(i0, j0), corner_key(i1, j1), false});
  };
  for (const auto& [r, s] : cells) {
    if (!member(r, s - 1)) add_edge(r, s, r + 1, s);          // south, +x
    if (!member(r + 1, s)) add_edge(r + 1, s, r + 1, s + 1);  // east, +y
    if (!member(r, s + 1)) add_edge(r + 1, s + 1, r, s + 1);  // north, -x
    if (!member(r - 1, s)) add_edge(r, s + 1, r, s);          // west, -y
  }

  auto corner_pos = [&](int key) {
    const int i = key / (cols + 2);
    const int j = key % (cols + 2);
    return Vec2(map.origin_offset() +
                map.resolution() * Vec2(i - 0.5, j - 0.5));
  };
  auto dir_of = [&](const Edge& e) {
    return Vec2(corner_pos(e.to) - corner_pos(e.from)).normalized();
  };

  Polygon best;
  double best_area = 0.0;
  for (size_t start = 0; start < edges.size(); ++start) {
    if (edges[start].used) continue;
    std::vector<int> loop;
    int cur = static_cast<int>(start);
    while (!edges[cur].used) {
      edges[cur].used = true;
      loop.push_back(cur);
      const Vec2 d = dir_of(edges[cur]);
      auto [lo, hi] = outgoing.equal_range(edges[cur].to);
      int next = -1;
      double best_turn = -10.0;
      for (auto it = lo; it != hi; ++it) {
        if (edges[it->second].used && it->second != static_cast<int>(start))
          continue;
        const Vec2 nd = dir_of(edges[it->second]);
        // left-turn preference: angle in (-pi, pi], larger = more left
        const double turn = std::atan2(d.x() * nd.y() - d.y() * nd.x(),
                                       d.dot(nd));
        if (turn > best_turn) {
          best_turn = turn;
          next = it->second;
        }
      }
      if (next < 0 || next == static_cast<int>(start)) break;
      cur = next;
    }
    Polygon poly;
    for (int ei : loop) poly.vertices.push_back(corner_pos(edges[ei].from));
    // collapse collinear runs
    Polygon compact;
    const size_t n = poly.vertices.size();
    for (size_t i = 0; i < n; ++i) {
      const Vec2& prev = poly.vertices[(i + n - 1) % n];
      const Vec2& cur_v = poly.vertices[i];
      const Vec2& next_v = poly.vertices[(i + 1) % n];
      const Vec2 a = cur_v - prev, b = next_v - cur_v;
      if (std::abs(a.x() * b.y() - a.y() * b.x()) > 1e-12)
        compact.vertices.push_back(cur_v);
    }
    const double a = std::abs(compact.area());
    if (a > best_area) {
      best_area = a;
      best = compact;
    }
  }
  best.make_ccw();
  return best;
}

std::vector<Component> trace_components(const HeightMap& map, double band_lo,
                                        double band_hi, double min_area) {
  const int rows = map.rows(), cols = map.cols();
  std::vector<char> mask(static_cast<size_t>(rows) * cols, 0);
  for (int r = 0; r < rows; ++r) {
    for (int s = 0; s < cols; ++s) {
      const HeightCell& c = map.cell(r, s);
      mask[r * cols + s] =
          (c.observed() && c.mean >= band_lo && c.mean <= band_hi) ? 1 : 0;
    }
  }

  std::vector<int> label(static_cast<size_t>(rows) * cols, -1);
  std::vector<Component> comps;
  for (int r0 = 0; r0 < rows; ++r0) {
    for (int s0 = 0; s0 < cols; ++s0) {
      if (!mask[r0 * cols + s0] || label[r0 * cols + s0] >= 0) continue;
      const int id = static_cast<int>(comps.size());
      Component comp;
      std::deque<std::pair<int, int>> queue{{r0, s0}};
      label[r0 * cols + s0] = id;
      while (!queue.empty()) {
        auto [r, s] = queue.front();
        queue.pop_front();
        comp.cells.emplace_back(r, s);
        comp.z_mean += map.cell(r, s).mean;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int ds = -1; ds <= 1; ++ds) {
            const int rr = r + dr, ss = s + ds;
            if (rr < 0 || rr >= rows || ss < 0 || ss >= cols) continue;
            if (!mask[rr * cols + ss] || label[rr * cols + ss] >= 0) continue;
            label[rr * cols + ss] = id;
            queue.emplace_back(rr, ss);
          }
        }
      }
      comp.area_m2 = static_cast<double>(comp.cells.size()) *
                     map.resolution() * map.resolution();
      comp.z_mean /= static_cast<double>(comp.cells.size());
      if (comp.area_m2 < min_area) continue;
      std::vector<char> in_comp(static_cast<size_t>(rows) * cols, 0);
      for (const auto& [r, s] : comp.cells) in_comp[r * cols + s] = 1;
      comp.boundary = trace_boundary(comp.cells, map, in_comp);
      if (comp.boundary.vertices.size() >= 3) comps.push_back(std::move(comp));
    }
  }
  std::sort(comps.begin(), comps.end(),
            [](const Component& a, const Component& b) {
              return a.area_m2 > b.area_m2;
            });
  return comps;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 e = b - a;
  const double len2 = e.squaredNorm();
  if (len2 < 1e-24) return (p - a).norm();
  const double t = std::clamp((p - a).dot(e) / len2, 0.0, 1.0);
  return (p - (a + t * e)).norm();
}

void rdp_chain(const std::vector<Vec2>& pts, size_t lo, size_t hi, double tol,
               std::vector<char>& keep) {
  if (hi <= lo + 1) return;
  double max_d = -1.0;
  size_t max_i = lo;
  for (size_t i = lo + 1; i < hi; ++i) {
    const double d = point_segment_distance(pts[i], pts[lo], pts[hi]);
    if (d > max_d) {
      max_d = d;
      max_i = i;
    }
  }
  if (max_d > tol) {
    keep[max_i] = 1;
    rdp_chain(pts, lo, max_i, tol, keep);
    rdp_chain(pts, max_i, hi, tol, keep);
  }
}

Polygon rdp_once(const Polygon& poly, double tol) {
  const auto& v = poly.vertices;
  const size_t n = v.size();
  // split the closed loop at vertex 0 and the farthest vertex from it
  size_t far = 1;
  double far_d = 0.0;
  for (size_t i = 1; i < n; ++i) {
    const double d = (v[i] - v[0]).squaredNorm();
    if (d > far_d) {
      far_d = d;
      far = i;
    }
  }
  std::vector<Vec2> chain1(v.begin(), v.begin() + far + 1);
  std::vector<Vec2> chain2(v.begin() + far, v.end());
  chain2.push_back(v[0]);

  Polygon out;
  std::vector<char> keep1(chain1.size(), 0), keep2(chain2.size(), 0);
  keep1.front() = keep1.back() = 1;
  keep2.front() = keep2.back() = 1;
  rdp_chain(chain1, 0, chain1.size() - 1, tol, keep1);
  rdp_chain(chain2, 0, chain2.size() - 1, tol, keep2);
  for (size_t i = 0; i + 1 < chain1.size(); ++i)
    if (keep1[i]) out.vertices.push_back(chain1[i]);
  for (size_t i = 0; i + 1 < chain2.size(); ++i)
    if (keep2[i]) out.vertices.push_back(chain2[i]);
  return out;
}

}  // namespace

std::vector<Polygon> extract_contours(const HeightMap& map, double band_lo,
                                      double band_hi, double min_area) {
  std::vector<Polygon> out;
  for (auto& comp : trace_components(map, band_lo, band_hi, min_area))
    out.push_back(std::move(comp.boundary));
  return out;
}

Polygon rdp_simplify(const Polygon& poly, double tolerance, int max_edges) {
  if (poly.vertices.size() < 3) return Polygon{};
  double tol = tolerance;
  Polygon result = rdp_once(poly, tol);
  while (static_cast<int>(result.vertices.size()) > max_edges) {
    tol *= 2.0;
    result = rdp_once(poly, tol);
  }
  if (result.vertices.size() < 3) return Polygon{};
  result.make_ccw();
  return result;
}

Polygon convex_hull(const Polygon& poly) {
  std::vector<Vec2> pts = poly.vertices;
  if (pts.size() < 3) return Polygon{};
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const Vec2& a, const Vec2& b) {
                          return a.x() == b.x() && a.y() == b.y();
                        }),
            pts.end());
  const size_t n = pts.size();
  if (n < 3) return Polygon{};

  auto cross = [](const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) -
           (a.y() - o.y()) * (b.x() - o.x());
  };
  // three-coins backtracking scan over the lower and upper chains
  std::vector<Vec2> hull(2 * n);
  size_t k = 0;
  for (size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  const size_t lower = k + 1;
  for (size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  if (hull.size() < 3) return Polygon{};
  Polygon out;
  out.vertices = std::move(hull);
  return out;
}

ConvexRegion to_halfspaces(const Polygon& hull) {
  std::vector<Vec2> v;
  for (const auto& p : hull.vertices) {
    if (v.empty() || (p - v.back()).norm() > 1e-12) v.push_back(p);
  }
  if (v.size() >= 2 && (v.front() - v.back()).norm() <= 1e-12) v.pop_back();
  if (v.size() < 3) {
    throw ScenarioError("to_halfspaces: degenerate polygon");
  }
  ConvexRegion region;
  region.vertices.vertices = v;
  region.vertices.make_ccw();
  const auto& verts = region.vertices.vertices;
  const int n = static_cast<int>(verts.size());
  region.A.resize(n, 2);
  region.b.resize(n);
  for (int i = 0; i < n; ++i) {
    const Vec2& a = verts[i];
    const Vec2& bb = verts[(i + 1) % n];
    const Vec2 e = bb - a;
    Vec2 normal(e.y(), -e.x());  // outward for CCW
    normal.normalize();
    region.A.row(i) = normal.transpose();
    region.b(i) = normal.dot(a);
  }
  return region;
}

Polygon clip_polygon(const Polygon& subject, const Polygon& clip) {
  std::vector<Vec2> output = subject.vertices;
  const auto& cv = clip.vertices;
  const size_t m = cv.size();
  for (size_t i = 0; i < m && !output.empty(); ++i) {
    const Vec2& a = cv[i];
    const Vec2& b = cv[(i + 1) % m];
    const Vec2 e = b - a;
    auto inside = [&](const Vec2& p) {
      return e.x() * (p.y() - a.y()) - e.y() * (p.x() - a.x()) >= 0.0;
    };
    auto intersect = [&](const Vec2& p, const Vec2& q) {
      const Vec2 d = q - p;
      const double denom = e.x() * d.y() - e.y() * d.x();
      const double t =
          (e.x() * (a.y() - p.y()) - e.y() * (a.x() - p.x())) / denom;
      return Vec2(p + t * d);
    };
    std::vector<Vec2> input = std::move(output);
    output.clear();
    const size_t n = input.size();
    for (size_t j = 0; j < n; ++j) {
      const Vec2& cur = input[j];
      const Vec2& prev = input[(j + n - 1) % n];
      const bool cur_in = inside(cur), prev_in = inside(prev);
      if (cur_in) {
        if (!prev_in) output.push_back(intersect(prev, cur));
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(intersect(prev, cur));
      }
    }
  }
  Polygon result;
  result.vertices = std::move(output);
  if (result.vertices.size() < 3 || std::abs(result.area()) < 1e-12)
    return Polygon{};
  return result;
}

std::vector<ConvexRegion> select_regions(const std::vector<ConvexRegion>& regions,
                                         int stance_region_id, const Vec2& goal,
                                         double forward_speed, int max_regions,
                                         const RegionExtractionConfig& cfg) {
  if (static_cast<int>(regions.size()) <= max_regions) return regions;

  BeamMask beam;
  beam.anchor = Vec2::Zero();
  const double goal_dist = goal.norm();
  beam.heading = goal_dist > 1e-9 ? std::atan2(goal.y(), goal.x()) : 0.0;
  beam.length = cfg.beam_length;
  beam.width = cfg.beam_width;
  beam.center_offset =
      std::min(cfg.forward_shift_fraction * goal_dist, cfg.forward_shift_cap);
  if (forward_speed < cfg.low_speed_thresh) {
    beam.length += cfg.back_extension;
    beam.center_offset -= 0.5 * cfg.back_extension;
  }
  const Polygon beam_poly = beam.corners();

  std::vector<const ConvexRegion*> survivors;
  for (const auto& region : regions) {
    if (region.id == stance_region_id) {
      survivors.push_back(&region);
      continue;
    }
    const Polygon overlap = clip_polygon(region.vertices, beam_poly);
    if (!overlap.vertices.empty() &&
        std::abs(overlap.area()) >= cfg.min_overlap) {
      survivors.push_back(&region);
    }
  }
  std::sort(survivors.begin(), survivors.end(),
            [](const ConvexRegion* a, const ConvexRegion* b) {
              const double da = a->vertices.centroid().norm();
              const double db = b->vertices.centroid().norm();
              if (da != db) return da < db;
              return a->id < b->id;
            });
  if (static_cast<int>(survivors.size()) > max_regions) {
    const auto stance_it =
        std::find_if(survivors.begin(), survivors.end(),
                     [&](const ConvexRegion* r) {
                       return r->id == stance_region_id;
                     });
    const bool stance_cut =
        stance_it != survivors.end() &&
        std::distance(survivors.begin(), stance_it) >= max_regions;
    const ConvexRegion* stance = stance_cut ? *stance_it : nullptr;
    survivors.resize(max_regions);
    if (stance) survivors.back() = stance;
  }
  std::vector<ConvexRegion> out;
  out.reserve(survivors.size());
  for (const auto* r : survivors) out.push_back(*r);
  return out;
}

std::vector<ConvexRegion> extract_regions(const HeightMap& map,
                                          const RegionExtractionConfig& cfg) {
  std::vector<ConvexRegion> regions;
  const double tol = cfg.rdp_tolerance_cells * map.resolution();
  int next_id = 0;
  for (const auto& comp :
       trace_components(map, cfg.band_lo, cfg.band_hi, cfg.min_area)) {
    const Polygon simplified = rdp_simplify(comp.boundary, tol, cfg.max_edges);
    if (simplified.vertices.size() < 3) continue;
    const Polygon hull = convex_hull(simplified);
    if (hull.vertices.size() < 3) continue;
    ConvexRegion region = to_halfspaces(hull);
    region.id = next_id++;
    region.z_mean = comp.z_mean;
    regions.push_back(std::move(region));
  }
  return regions;
}

void write_regions(const std::vector<ConvexRegion>& regions,
                   std::ostream& os) {
  char buf[160];
  os << "regions " << regions.size() << '\n';
  for (const auto& r : regions) {
    os << "region " << r.id << '\n';
    std::snprintf(buf, sizeof(buf), "z_mean %.12g", r.z_mean);
    os << buf << '\n';
    os << "vertices " << r.vertices.vertices.size() << '\n';
    for (const auto& v : r.vertices.vertices) {
      std::snprintf(buf, sizeof(buf), "%.12g %.12g", v.x(), v.y());
      os << buf << '\n';
    }
    os << "halfspaces " << r.edges() << '\n';
    for (int i = 0; i < r.edges(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.12g %.12g %.12g", r.A(i, 0),
                    r.A(i, 1), r.b(i));
      os << buf << '\n';
    }
    os << "end" << '\n';
  }
}

std::vector<ConvexRegion> read_regions(std::istream& is) {
  std::string tok;
  size_t count = 0;
  if (!(is >> tok >> count) || tok != "regions") {
    throw ScenarioError("read_regions: expected 'regions <count>'");
  }
  std::vector<ConvexRegion> regions(count);
  for (auto& r : regions) {
    size_t nv = 0, nh = 0;
    if (!(is >> tok >> r.id) || tok != "region")
      throw ScenarioError("read_regions: expected 'region <id>'");
    if (!(is >> tok >> r.z_mean) || tok != "z_mean")
      throw ScenarioError("read_regions: expected 'z_mean'");
    if (!(is >> tok >> nv) || tok != "vertices")
      throw ScenarioError("read_regions: expected 'vertices'");
    r.vertices.vertices.resize(nv);
    for (auto& v : r.vertices.vertices)
      if (!(is >> v.x() >> v.y()))
        throw ScenarioError("read_regions: truncated vertex list");
    if (!(is >> tok >> nh) || tok != "halfspaces")
      throw ScenarioError("read_regions: expected 'halfspaces'");
    r.A.resize(nh, 2);
    r.b.resize(nh);
    for (size_t i = 0; i < nh; ++i)
      if (!(is >> r.A(i, 0) >> r.A(i, 1) >> r.b(i)))
        throw ScenarioError("read_regions: truncated half-space list");
    if (!(is >> tok) || tok != "end")
      throw ScenarioError("read_regions: expected 'end'");
  }
  return regions;
}

}  // namespace stepstone
