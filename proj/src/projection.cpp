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

#include "panolabel/projection.hpp"

#include <algorithm>
#include <cmath>

namespace panolabel {

CameraModel CameraModel::for_panorama(const PanoramaMeta& pano) { return for_panorama(pano, CameraHeights{}); }

CameraModel CameraModel::for_panorama(const PanoramaMeta& pano, const CameraHeights& heights,
                                      double forward_x_fraction) {
  CameraModel cm;
  cm.camera_height_m = pano.surface == Surface::Water ? heights.water_m : heights.land_m;
  cm.heading_deg = pano.heading_deg;
  cm.width_px = pano.width_px;
  cm.height_px = pano.height_px;
  cm.forward_x_fraction = forward_x_fraction;
  return cm;
}

namespace {

/// Unwrapped column: forward_x_fraction * width plus the signed azimuth
/// offset from the heading, so values may fall outside [0, width).
double unwrapped_x(const CameraModel& cm, double azimuth_deg) {
  return cm.width_px * (cm.forward_x_fraction + angular_diff(azimuth_deg, cm.heading_deg) / 360.0);
}

double wrap_x(double x, double width) {
  double r = std::fmod(x, width);
  if (r < 0.0) r += width;
  if (r >= width) r = 0.0;
  return r;
}

}  // namespace

double azimuth_to_x(const CameraModel& cm, double azimuth_deg) {
  return wrap_x(unwrapped_x(cm, azimuth_deg), cm.width_px);
}

double elevation_to_y(const CameraModel& cm, double height_above_ground_m, double distance_m) {
  if (!(distance_m > 0.0)) throw ProjectionError("distance must be > 0");
  const double phi_deg = rad2deg(std::atan2(height_above_ground_m - cm.camera_height_m, distance_m));
  return cm.height_px * (0.5 - phi_deg / 180.0);
}

std::vector<BBox> project_box(const CameraModel& cm, const Measured3D& m, double min_extent_px) {
  const double w = cm.width_px;
  const double h = cm.height_px;

  double left_deg = 0.0;
  double span_deg = 0.0;
  if (m.azimuth_left_deg && m.azimuth_right_deg) {
    left_deg = *m.azimuth_left_deg;
    span_deg = normalize_degrees(*m.azimuth_right_deg - *m.azimuth_left_deg);
  } else {
    const double half = rad2deg(std::atan(m.width_m / (2.0 * m.distance_m)));
    left_deg = m.azimuth_center_deg - half;
    span_deg = 2.0 * half;
  }
  if (!std::isfinite(span_deg) || span_deg >= 360.0) {
    throw ProjectionError("object " + m.object_id + " spans a full turn around the camera");
  }

  const double x0 = azimuth_to_x(cm, left_deg);
  const double x1 = x0 + w * span_deg / 360.0;
  const double y0 = std::clamp(elevation_to_y(cm, m.height_m, m.distance_m), 0.0, h);
  const double y1 = std::clamp(elevation_to_y(cm, 0.0, m.distance_m), 0.0, h);
  if (y1 - y0 < min_extent_px) return {};

  BBox proto;
  proto.cls = m.cls;
  proto.y_min = y0;
  proto.y_max = y1;
  proto.object_id = m.object_id;
  proto.distance_m = m.distance_m;
  proto.source = m.source;
  proto.metadata = m.metadata;

  std::vector<BBox> out;
  auto emit = [&](double a, double b) {
    if (b - a < min_extent_px) return;
    BBox box = proto;
    box.x_min = a;
    box.x_max = b;
    out.push_back(std::move(box));
  };
  if (x1 <= w) {
    emit(x0, x1);
    return out;
  }
  emit(x0, w);
  emit(0.0, x1 - w);
  if (out.size() == 2) {
    const std::string link = "link:" + m.object_id;
    out[0].link_id = link;
    out[1].link_id = link;
  }
  return out;
}

}  // namespace panolabel
