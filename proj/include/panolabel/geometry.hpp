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

// Real-world measurements of geospatial objects as seen from a camera
// position: minimum distance, apparent width, height and azimuths.

#pragma once

#include <optional>
#include <vector>

#include "panolabel/core.hpp"
#include "panolabel/ingest.hpp"

namespace panolabel {

struct Measured3D {
  std::string object_id;
  ObjectClass cls = ObjectClass::Building;
  double distance_m = 0.0;
  double width_m = 0.0;
  double height_m = 0.0;
  double azimuth_center_deg = 0.0;
  std::optional<double> azimuth_left_deg;   // clockwise interval left -> right covers the object
  std::optional<double> azimuth_right_deg;
  std::string source;
  Metadata metadata;
};

/// Outer extent of an object in azimuth, with the real-world distance
/// between the two points that bound it.
struct AngularExtent {
  double width_m = 0.0;
  double az_left_deg = 0.0;
  double az_right_deg = 0.0;
  GeoPoint left;
  GeoPoint right;
};

std::vector<const UrbanObject*> query_radius(const ObjectStore& store, GeoPoint cam, double radius = 150.0);

/// Distance to the nearest point of the geometry, or nullopt when the camera
/// lies strictly inside a polygon.
std::optional<double> min_distance(const Geometry& geom, GeoPoint cam);

/// True when the segment cam -> ring[i] meets the polygon boundary only at
/// that vertex.
bool vertex_visible(const Polygon& poly, std::size_t i, GeoPoint cam);

/// Picks the pair of camera-visible vertices subtending the largest angle at
/// the camera. Throws GeometryError if the camera is inside the polygon or no
/// two vertices are visible.
AngularExtent visible_width_polygon(const Polygon& poly, GeoPoint cam);

/// Clips the polyline to the disk and measures the clipped part between its
/// first and last points. Returns nullopt when the clipped part degenerates
/// to a single point (or misses the disk).
std::optional<AngularExtent> visible_width_polyline(const Polyline& line, GeoPoint cam, double radius = 150.0);

struct MeasureConfig {
  double radius_m = 150.0;
  /// Height for classes without an estimate when no elevation data covers
  /// the object (trees).
  double fallback_height_m = 8.0;
  /// Floor applied to the camera-object distance so objects passing under
  /// the camera still project to a finite box.
  double min_distance_m = 0.5;
  double footprint_buffer_m = 0.5;
};

struct ElevationPair {
  const ElevationGrid* dsm = nullptr;
  const ElevationGrid* dtm = nullptr;
};

/// Full measurement of one object. Returns nullopt when the camera is inside
/// the object (the object is skipped).
std::optional<Measured3D> measure(const UrbanObject& obj, GeoPoint cam, const ClassTable& specs,
                                  ElevationPair elevation = {}, const MeasureConfig& config = {});

}  // namespace panolabel
