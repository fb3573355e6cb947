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

// Equirectangular camera: x is linear in azimuth, y is linear in elevation
// angle. Objects whose azimuth interval crosses the image seam become a pair
// of linked boxes.

#pragma once

#include <vector>

#include "panolabel/core.hpp"
#include "panolabel/geometry.hpp"

namespace panolabel {

class ProjectionError : public Error {
 public:
  using Error::Error;
};

/// Camera height above ground by surface.
struct CameraHeights {
  double land_m = 2.0;
  double water_m = 1.0;
};

struct CameraModel {
  double camera_height_m = 2.0;
  double heading_deg = 0.0;
  int width_px = 1400;
  int height_px = 700;
  double forward_x_fraction = 0.5;  // where the heading lands, as a fraction of width

  static CameraModel for_panorama(const PanoramaMeta& pano, const CameraHeights& heights,
                                  double forward_x_fraction = 0.5);
  static CameraModel for_panorama(const PanoramaMeta& pano);
};

/// Pixel column of an azimuth, in [0, width).
double azimuth_to_x(const CameraModel& cm, double azimuth_deg);

/// Pixel row of a point `height_above_ground_m` up at horizontal distance
/// `distance_m`.
double elevation_to_y(const CameraModel& cm, double height_above_ground_m, double distance_m);

/// One box, two linked boxes across the seam, or nothing when the result is
/// narrower or shorter than `min_extent_px`. Throws ProjectionError when the
/// angular extent reaches a full turn.
std::vector<BBox> project_box(const CameraModel& cm, const Measured3D& m, double min_extent_px = 1.0);

}  // namespace panolabel
