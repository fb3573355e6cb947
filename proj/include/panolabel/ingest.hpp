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

#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "panolabel/core.hpp"

namespace panolabel {

// ---------------------------------------------------------------------------
// Elevation rasters

/// Row-major raster of heights. Row 0 is the northernmost row; `origin` is the
/// lower-left corner of the lower-left cell.
class ElevationGrid {
 public:
  ElevationGrid(GeoPoint origin, double cell_size, int rows, int cols, std::vector<double> values,
                double nodata = -9999.0);

  GeoPoint origin() const { return origin_; }
  double cell_size() const { return cell_size_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double nodata() const { return nodata_; }
  std::span<const double> values() const { return values_; }

  double at(int row, int col) const { return values_[static_cast<std::size_t>(row) * cols_ + col]; }
  bool is_nodata(int row, int col) const { return at(row, col) == nodata_; }
  GeoPoint cell_center(int row, int col) const;

  /// Cell containing p, or nullopt outside the raster.
  std::optional<std::pair<int, int>> cell_of(GeoPoint p) const;

  /// Nearest-cell height; nullopt outside the raster or on a nodata cell.
  std::optional<double> sample(GeoPoint p) const;

  friend bool operator==(const ElevationGrid&, const ElevationGrid&) = default;

 private:
  GeoPoint origin_;
  double cell_size_;
  int rows_;
  int cols_;
  std::vector<double> values_;
  double nodata_;
};

/// ESRI ASCII grid: ncols, nrows, xllcorner, yllcorner, cellsize,
/// nodata_value, then rows north to south.
ElevationGrid parse_grid(std::istream& in);
ElevationGrid load_grid(const std::filesystem::path& path);
void write_grid(std::ostream& out, const ElevationGrid& grid);

/// Maximum of DSM - DTM over the object's footprint, clamped below at 0.
/// The footprint is the set of DSM cells whose centers lie inside a polygon,
/// or within `buffer_m` of a point or polyline. Returns nullopt when no
/// footprint cell has valid data in both rasters.
std::optional<double> object_height_from_grids(const UrbanObject& obj, const ElevationGrid& dsm,
                                               const ElevationGrid& dtm, double buffer_m = 0.5);

// ---------------------------------------------------------------------------
// Geospatial objects

/// Maps source `class` tags to classes. Tags are matched case-insensitively.
class ClassMapping {
 public:
  /// Every class key and display name maps to itself.
  static ClassMapping defaults();
  /// JSON object {"tag": "Class Name", ...} layered over the defaults.
  static ClassMapping load(const std::filesystem::path& path);

  void add(std::string tag, ObjectClass cls);
  std::optional<ObjectClass> lookup(std::string_view tag) const;

 private:
  std::map<std::string, ObjectClass> rules_;
};

/// Immutable spatial index over objects.
class ObjectStore {
 public:
  ObjectStore();
  explicit ObjectStore(std::vector<UrbanObject> objects);
  ObjectStore(ObjectStore&&) noexcept;
  ObjectStore& operator=(ObjectStore&&) noexcept;
  ~ObjectStore();

  const std::vector<UrbanObject>& objects() const { return objects_; }
  std::size_t size() const { return objects_.size(); }

  /// Objects whose geometry intersects the closed disk, in storage order.
  std::vector<const UrbanObject*> query_disk(GeoPoint center, double radius) const;

 private:
  struct Index;
  std::vector<UrbanObject> objects_;
  std::unique_ptr<Index> index_;
};

struct FeatureError {
  std::size_t feature_index = 0;
  std::string message;
};

struct LoadedObjects {
  ObjectStore store;
  std::size_t unmapped = 0;           // features whose class tag has no rule
  std::vector<FeatureError> errors;   // features rejected for invalid geometry
};

/// GeoJSON subset: a FeatureCollection of Point, LineString and Polygon
/// features in the planar CRS. Properties `class` (required), `source`,
/// `height_m` and `width_m` are interpreted; all others become metadata.
LoadedObjects parse_objects(const nlohmann::json& doc, const ClassMapping& mapping);
LoadedObjects load_objects(const std::filesystem::path& path,
                           const ClassMapping& mapping = ClassMapping::defaults());
nlohmann::json objects_to_geojson(std::span<const UrbanObject> objects);
void save_objects(const std::filesystem::path& path, std::span<const UrbanObject> objects);

// ---------------------------------------------------------------------------
// Panorama poses

PanoramaMeta pose_from_json(const nlohmann::json& j);
nlohmann::json pose_to_json(const PanoramaMeta& p);

/// JSON-lines, one pose per line. Errors carry the line number.
std::vector<PanoramaMeta> parse_poses(std::istream& in);
std::vector<PanoramaMeta> load_poses(const std::filesystem::path& path);
void write_poses(std::ostream& out, std::span<const PanoramaMeta> poses);

/// Keeps a subset whose pairwise distances are all >= min_sep, preferring
/// newer images: visits poses by descending timestamp (ties by id) and
/// accepts one iff no accepted pose lies closer than min_sep. Output keeps
/// that visiting order.
std::vector<PanoramaMeta> density_filter(std::span<const PanoramaMeta> panos, double min_sep = 2.5);

// ---------------------------------------------------------------------------

/// Spherical azimuthal-equidistant projection of WGS84 coordinates onto a
/// local tangent plane, for bringing geodetic inputs into a metric CRS.
class LocalProjection {
 public:
  LocalProjection(double origin_lat_deg, double origin_lon_deg);
  GeoPoint forward(double lat_deg, double lon_deg) const;

 private:
  double lat0_;
  double lon0_;
};

}  // namespace panolabel
