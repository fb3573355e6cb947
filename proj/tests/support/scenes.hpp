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

// Random synthetic cities and independent reference computations shared by
// the unit tests and the acceptance runner. Nothing here calls the library's
// geometry or projection code.

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "panolabel/core.hpp"
#include "panolabel/metrics.hpp"
#include "panolabel/refine.hpp"

namespace scenes {

using panolabel::BBox;
using panolabel::BoxSet;
using panolabel::GeoPoint;
using panolabel::ObjectClass;
using panolabel::PanoramaMeta;
using panolabel::UrbanObject;

struct Scene {
  PanoramaMeta pano;
  std::vector<UrbanObject> objects;
};

struct SceneOptions {
  std::size_t min_objects = 0;
  std::size_t max_objects = 30;
  double min_distance_m = 5.0;
  double max_distance_m = 140.0;
  std::vector<std::string> sources{"osm"};
};

/// Camera somewhere in [0, 1000]^2 with a random heading; objects are
/// convex polygons, two-point lines and points, all outside the camera.
Scene random_scene(std::mt19937_64& rng, const SceneOptions& options = {});

/// Clockwise rotation by `theta_deg` about `pivot`, then translation.
GeoPoint rotate_point(GeoPoint p, GeoPoint pivot, double theta_deg, GeoPoint shift = {});
Scene rotate_scene(const Scene& s, double theta_deg, GeoPoint shift);

/// What an object should look like on the panorama, from plain trigonometry.
struct Expected {
  std::string object_id;
  double distance_m = 0.0;
  double x0 = 0.0;  // unwrapped: x0 in [0, W), x1 may exceed W
  double x1 = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  std::vector<std::pair<double, double>> pieces;  // x ranges left after dropping slivers
  bool near_cutoff = false;                        // some extent within 1e-6 px of the 1 px cutoff
  double x_center() const { return 0.5 * (x0 + x1); }
};

/// Reference boxes for every object of the scene, with the default class
/// table, 2 m (land) or 1 m (water) camera height, no elevation rasters and
/// the heading at mid-width.
std::vector<Expected> expected_boxes(const Scene& s, double fallback_height_m = 8.0);

/// Largest pixel disagreement between generated boxes and the reference,
/// with x compared around the cylinder. Objects near the 1 px cutoff are
/// skipped. Returns infinity, with a reason, when the box structure differs.
double max_box_error(const BoxSet& got, const std::vector<Expected>& expected, std::string* why = nullptr);

/// Shortest distance from p to segment [a, b].
double ref_point_segment(GeoPoint p, GeoPoint a, GeoPoint b);

/// Brute-force maximal total of score(i, j) over injective matchings of the
/// smaller side, summed in row order.
double brute_force_best(std::size_t rows, std::size_t cols, const std::vector<double>& score);

/// Area of the intersection of two instances on the cylinder of width `w`,
/// from their pieces cut at the seam.
double ref_cylinder_overlap(double a0, double a1, double ay0, double ay1, double b0, double b1, double by0,
                            double by1, double w);

/// Plain rectangle IoU.
double rect_iou(const BBox& a, const BBox& b);

/// Single-class AP by hand: greedy matching by score, precision and recall
/// at every rank, then the mean over 101 recall levels of the best precision
/// reached at or beyond that recall.
double reference_ap(std::vector<panolabel::Detection> dets, const std::vector<BoxSet>& truth, double t);

/// Random axis-aligned box with positive extent inside [0, extent]^2.
BBox random_box(std::mt19937_64& rng, double extent = 100.0, ObjectClass cls = ObjectClass::Building);

/// Six boxes on a 1400x700 panorama exercising every refinement rule, and
/// the result traced by hand: the sign loses the part behind the building,
/// the farther tree goes (60% behind the nearer one), the two trash
/// containers from different sources merge and the merged box then
/// disappears behind the sign.
BoxSet six_box_scene();
BoxSet six_box_expected();

/// Post-refinement invariants, checked with plain rectangle arithmetic on
/// the cylinder: nothing entirely inside a nearer building, nothing more
/// than `general` behind a nearer blocking box, no tree more than `tree`
/// behind a nearer tree. Returns one line per violation.
std::vector<std::string> refine_violations(const BoxSet& set, const panolabel::ClassSet& non_blocking,
                                           double general = 0.8, double tree = 0.3);

/// Box with the fields refinement needs.
BBox make_box(ObjectClass cls, double x0, double y0, double x1, double y1, double distance_m,
              const std::string& id, const std::string& source = "osm");

/// Uniform real in [lo, hi).
double uniform(std::mt19937_64& rng, double lo, double hi);

}  // namespace scenes
