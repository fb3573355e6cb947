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

#pragma once

#include <algorithm>
#include <cmath>
#include <span>

namespace panolabel {

/// Position in a planar metric CRS: meters east (x) and north (y).
struct GeoPoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

inline GeoPoint operator+(GeoPoint a, GeoPoint b) { return {a.x + b.x, a.y + b.y}; }
inline GeoPoint operator-(GeoPoint a, GeoPoint b) { return {a.x - b.x, a.y - b.y}; }
inline GeoPoint operator*(double s, GeoPoint a) { return {s * a.x, s * a.y}; }

inline double dot(GeoPoint a, GeoPoint b) { return a.x * b.x + a.y * b.y; }
inline double cross(GeoPoint a, GeoPoint b) { return a.x * b.y - a.y * b.x; }
inline double distance(GeoPoint a, GeoPoint b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Twice the signed area of triangle (a, b, c); positive when counter-clockwise.
inline double orient(GeoPoint a, GeoPoint b, GeoPoint c) { return cross(b - a, c - a); }

/// True when p lies on the closed segment [a, b]. Assumes p is collinear with a, b.
inline bool within_box(GeoPoint a, GeoPoint b, GeoPoint p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
         std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

/// Closed-segment intersection test, including touching and collinear overlap.
inline bool segments_intersect(GeoPoint p1, GeoPoint p2, GeoPoint q1, GeoPoint q2) {
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  if (d1 == 0 && within_box(q1, q2, p1)) return true;
  if (d2 == 0 && within_box(q1, q2, p2)) return true;
  if (d3 == 0 && within_box(p1, p2, q1)) return true;
  if (d4 == 0 && within_box(p1, p2, q2)) return true;
  return false;
}

/// Closest point to p on the segment [a, b].
inline GeoPoint closest_on_segment(GeoPoint p, GeoPoint a, GeoPoint b) {
  const GeoPoint ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return a;
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

inline double point_segment_distance(GeoPoint p, GeoPoint a, GeoPoint b) {
  return distance(p, closest_on_segment(p, a, b));
}

/// Shoelace signed area of an open vertex ring (closing vertex not repeated).
inline double signed_area(std::span<const GeoPoint> ring) {
  double twice = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    twice += cross(ring[i], ring[(i + 1) % ring.size()]);
  }
  return 0.5 * twice;
}

/// Even-odd containment for an open vertex ring. Points on the boundary are
/// reported as not strictly inside.
inline bool strictly_inside(std::span<const GeoPoint> ring, GeoPoint p) {
  const std::size_t n = ring.size();
  for (std::size_t i = 0; i < n; ++i) {
    const GeoPoint a = ring[i];
    const GeoPoint b = ring[(i + 1) % n];
    if (orient(a, b, p) == 0.0 && within_box(a, b, p)) return false;
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const GeoPoint a = ring[i];
    const GeoPoint b = ring[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

}  // namespace panolabel
