// Copyright 2026 The Panolabel Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "panolabel/geometry.hpp"

#include <cmath>
#include <limits>

namespace panolabel {

namespace {

// Vertices whose unwrapped azimuths differ by less than this are treated as
// angular ties.
constexpr double kAngleTieDeg = 1e-9;

GeoPoint closest_point(const Polyline& line, GeoPoint p) {
  const auto& pts = line.points();
  GeoPoint best = pts[0];
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const GeoPoint c = closest_on_segment(p, pts[i], pts[i + 1]);
    const double d = distance(c, p);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

std::vector<const UrbanObject*> query_radius(const ObjectStore& store, GeoPoint cam, double radius) {
  if (!(radius > 0.0)) throw Error("query radius must be > 0");
  return store.query_disk(cam, radius);
}

std::optional<double> min_distance(const Geometry& geom, GeoPoint cam) {
  if (const auto* poly = std::get_if<Polygon>(&geom)) {
    if (strictly_inside(poly->vertices(), cam)) return std::nullopt;
  }
  return geometry_distance(geom, cam);
}

bool vertex_visible(const Polygon& poly, std::size_t i, GeoPoint cam) {
  const auto v = poly.vertices();
  const std::size_t n = v.size();
  const GeoPoint target = v[i];
  if (target == cam) return false;
  for (std::size_t e = 0; e < n; ++e) {
    const std::size_t f = (e + 1) % n;
    const GeoPoint a = v[e];
    const GeoPoint b = v[f];
    if (e == i || f == i) {
      // Incident edge: blocks only if it runs back along the sight line.
      const GeoPoint other = (e == i) ? b : a;
      if (orient(cam, target, other) == 0.0 && dot(other - target, cam - target) > 0.0) return false;
      continue;
    }
    if (segments_intersect(cam, target, a, b)) return false;
  }
  return true;
}

AngularExtent visible_width_polygon(const Polygon& poly, GeoPoint cam) {
  const auto v = poly.vertices();
  if (poly.area() == 0.0) throw GeometryError("degenerate polygon");
  if (strictly_inside(v, cam)) throw GeometryError("camera inside polygon");

  // Azimuths unwrapped along the ring. The camera is outside, so the ring
  // has zero winding around it and the unwrapped values form one branch.
  std::vector<double> unwrapped(v.size());
  unwrapped[0] = azimuth(cam, v[0]);
  for (std::size_t k = 1; k < v.size(); ++k) {
    unwrapped[k] = unwrapped[k - 1] + angular_diff(azimuth(cam, v[k]), azimuth(cam, v[k - 1]));
  }

  std::optional<std::size_t> lo, hi;
  auto nearer = [&](std::size_t a, std::size_t b) { return distance(cam, v[a]) < distance(cam, v[b]); };
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (!vertex_visible(poly, k, cam)) continue;
    if (!lo || unwrapped[k] < unwrapped[*lo] - kAngleTieDeg ||
        (std::abs(unwrapped[k] - unwrapped[*lo]) <= kAngleTieDeg && nearer(k, *lo))) {
      lo = k;
    }
    if (!hi || unwrapped[k] > unwrapped[*hi] + kAngleTieDeg ||
        (std::abs(unwrapped[k] - unwrapped[*hi]) <= kAngleTieDeg && nearer(k, *hi))) {
      hi = k;
    }
  }
  if (!lo || !hi || *lo == *hi) throw GeometryError("fewer than two vertices visible from camera");

  AngularExtent out;
  out.left = v[*lo];
  out.right = v[*hi];
  out.width_m = distance(out.left, out.right);
  out.az_left_deg = normalize_degrees(unwrapped[*lo]);
  out.az_right_deg = normalize_degrees(unwrapped[*hi]);
  return out;
}

std::optional<AngularExtent> visible_width_polyline(const Polyline& line, GeoPoint cam, double radius) {
  const auto& pts = line.points();
  std::optional<std::size_t> first_seg, last_seg;
  GeoPoint first{}, last{};
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const GeoPoint a = pts[i];
    const GeoPoint d = pts[i + 1] - a;
    const GeoPoint f = a - cam;
    // |f + t d|^2 <= r^2
    const double qa = dot(d, d);
    const double qb = 2.0 * dot(f, d);
    const double qc = dot(f, f) - radius * radius;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc < 0.0) continue;
    const double root = std::sqrt(disc);
    const double t0 = std::max(0.0, (-qb - root) / (2.0 * qa));
    const double t1 = std::min(1.0, (-qb + root) / (2.0 * qa));
    if (t0 > t1) continue;
    if (!first_seg) {
      first_seg = i;
      first = t0 == 0.0 ? a : a + t0 * d;
    }
    last_seg = i;
    last = t1 == 1.0 ? pts[i + 1] : a + t1 * d;
  }
  if (!first_seg || distance(first, last) <= 1e-9) return std::nullopt;

  // Sweep the azimuth along the polyline between the two clip points so the
  // left/right order follows the object rather than the shorter arc.
  std::vector<GeoPoint> path{first};
  for (std::size_t k = *first_seg + 1; k <= *last_seg; ++k) path.push_back(pts[k]);
  path.push_back(last);
  double sweep = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    if (path[k] == path[k - 1]) continue;
    sweep += angular_diff(azimuth(cam, path[k]), azimuth(cam, path[k - 1]));
  }

  AngularExtent out;
  out.width_m = distance(first, last);
  if (sweep >= 0.0) {
    out.left = first;
    out.right = last;
  } else {
    out.left = last;
    out.right = first;
  }
  out.az_left_deg = azimuth(cam, out.left);
  out.az_right_deg = azimuth(cam, out.right);
  return out;
}

std::optional<Measured3D> measure(const UrbanObject& obj, GeoPoint cam, const ClassTable& specs,
                                  ElevationPair elevation, const MeasureConfig& config) {
  const auto dist = min_distance(obj.geometry, cam);
  if (!dist) return std::nullopt;
  const ClassSpec& spec = specs[obj.cls];

  Measured3D m;
  m.object_id = obj.id;
  m.cls = obj.cls;
  m.source = obj.source;
  m.metadata = obj.metadata;
  m.distance_m = std::max(*dist, config.min_distance_m);

  std::optional<AngularExtent> extent;
  if (const auto* poly = std::get_if<Polygon>(&obj.geometry)) {
    try {
      extent = visible_width_polygon(*poly, cam);
    } catch (const GeometryError&) {
      extent.reset();
    }
    m.azimuth_center_deg = azimuth(cam, poly->centroid());
  } else if (const auto* line = std::get_if<Polyline>(&obj.geometry)) {
    extent = visible_width_polyline(*line, cam, config.radius_m);
    m.azimuth_center_deg = azimuth(cam, closest_point(*line, cam));
  } else {
    m.azimuth_center_deg = azimuth(cam, std::get<PointGeom>(obj.geometry).at);
  }

  if (extent && extent->width_m > 0.0) {
    m.width_m = extent->width_m;
    m.azimuth_left_deg = extent->az_left_deg;
    m.azimuth_right_deg = extent->az_right_deg;
    m.azimuth_center_deg = azimuth(cam, 0.5 * (extent->left + extent->right));
  } else {
    m.width_m = obj.width_override.value_or(spec.width_estimate);
  }

  if (obj.height_override) {
    m.height_m = *obj.height_override;
  } else {
    std::optional<double> from_grid;
    if (spec.height_from_elevation && elevation.dsm && elevation.dtm) {
      from_grid = object_height_from_grids(obj, *elevation.dsm, *elevation.dtm, config.footprint_buffer_m);
    }
    if (from_grid && *from_grid > 0.0) {
      m.height_m = *from_grid;
    } else {
      m.height_m = spec.height_estimate.value_or(config.fallback_height_m);
    }
  }
  return m;
}

}  // namespace panolabel
