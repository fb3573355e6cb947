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

// Shared domain model: object classes and their size priors, geospatial
// objects, panorama poses and pixel-space boxes.
//
// Conventions used throughout the library:
//  - geospatial inputs live in one planar metric CRS (x east, y north);
//  - azimuths are degrees clockwise from north, normalized to [0, 360);
//  - pixel origin is the top-left corner, x to the right, y downward.

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "panolabel/planar.hpp"

namespace panolabel {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that violates a documented file format.
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Geometry that violates Point/Polyline/Polygon invariants.
class GeometryError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Angles

/// Wraps any finite angle into [0, 360).
double normalize_degrees(double deg);

/// Signed shortest rotation from b to a, in (-180, 180].
double angular_diff(double a_deg, double b_deg);

/// Compass bearing from `from` to `to`, clockwise from north, in [0, 360).
double azimuth(GeoPoint from, GeoPoint to);

constexpr double kPi = 3.14159265358979323846;
constexpr double deg2rad(double d) { return d * kPi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / kPi; }

// ---------------------------------------------------------------------------
// Object classes

enum class ObjectClass : std::uint8_t {
  AdvertisingColumn,
  BicyclePath,
  Building,
  Bus,
  Bridge,
  Ferry,
  HighVoltagePylon,
  Lamppost,
  Park,
  Playground,
  PublicToilet,
  PublicTransportStop,
  RailwayTrack,
  SportFacility,
  TrafficLight,
  TrafficSign,
  Train,
  Tram,
  TrashContainer,
  Tree,
  Waterway,
  Windturbine,
};

inline constexpr std::size_t kClassCount = 22;

/// All classes in canonical (category id) order.
const std::array<ObjectClass, kClassCount>& all_classes();

/// Human-readable name, e.g. "Traffic Sign".
std::string_view class_name(ObjectClass c);

/// Machine key, e.g. "traffic_sign".
std::string_view class_key(ObjectClass c);

/// 1-based category id in canonical order.
int category_id(ObjectClass c);

/// Accepts a key or a display name, case-insensitively.
std::optional<ObjectClass> parse_class(std::string_view text);
std::optional<ObjectClass> class_from_category_id(int id);

struct ClassSpec {
  ObjectClass cls = ObjectClass::Building;
  double width_estimate = 0.0;
  std::optional<double> height_estimate;
  bool non_blocking = false;
  bool height_from_elevation = false;

  friend bool operator==(const ClassSpec&, const ClassSpec&) = default;
};

class ClassTableError : public Error {
 public:
  enum class Reason { DuplicateClass, InvalidEstimate, MissingEstimate, MissingClass };
  ClassTableError(Reason reason, ObjectClass cls, const std::string& what)
      : Error(what), reason_(reason), cls_(cls) {}
  Reason reason() const { return reason_; }
  ObjectClass cls() const { return cls_; }

 private:
  Reason reason_;
  ObjectClass cls_;
};

/// Throws ClassTableError on the first violated invariant.
void validate_class_table(std::span<const ClassSpec> specs);

/// Size priors and occlusion flags for every class. Always complete.
class ClassTable {
 public:
  /// Validates and requires all 22 classes.
  explicit ClassTable(std::vector<ClassSpec> specs);

  static const ClassTable& defaults();

  const ClassSpec& operator[](ObjectClass c) const { return specs_[static_cast<std::size_t>(c)]; }
  std::span<const ClassSpec> specs() const { return specs_; }

 private:
  std::vector<ClassSpec> specs_;  // indexed by ObjectClass
};

/// The 22-class table of width/height estimates used when geometry or
/// elevation cannot supply a measurement.
std::vector<ClassSpec> default_class_specs();

// ---------------------------------------------------------------------------
// Geometry

struct PointGeom {
  GeoPoint at;
  friend bool operator==(const PointGeom&, const PointGeom&) = default;
};

class Polyline {
 public:
  /// Requires >= 2 points and no zero-length segment.
  explicit Polyline(std::vector<GeoPoint> points);
  const std::vector<GeoPoint>& points() const { return points_; }
  friend bool operator==(const Polyline&, const Polyline&) = default;

 private:
  std::vector<GeoPoint> points_;
};

class Polygon {
 public:
  /// Closes the ring if needed. Requires >= 3 distinct vertices, no repeated
  /// consecutive vertex and no self-intersection.
  explicit Polygon(std::vector<GeoPoint> ring);

  /// Closed ring, first == last.
  const std::vector<GeoPoint>& ring() const { return ring_; }
  /// Vertices without the closing duplicate.
  std::span<const GeoPoint> vertices() const { return {ring_.data(), ring_.size() - 1}; }
  double area() const;
  GeoPoint centroid() const;
  friend bool operator==(const Polygon&, const Polygon&) = default;

 private:
  std::vector<GeoPoint> ring_;
};

using Geometry = std::variant<PointGeom, Polyline, Polygon>;

/// Axis-aligned extent of a geometry: {min, max} corners.
std::pair<GeoPoint, GeoPoint> bounds(const Geometry& g);

/// Euclidean distance from p to the geometry; 0 when p is inside a polygon.
double geometry_distance(const Geometry& g, GeoPoint p);

/// Key-value payload carried from geospatial sources onto boxes.
using Metadata = std::map<std::string, nlohmann::json>;

struct UrbanObject {
  std::string id;
  ObjectClass cls = ObjectClass::Building;
  Geometry geometry = PointGeom{};
  std::string source;
  Metadata metadata;
  std::optional<double> height_override;
  std::optional<double> width_override;

  friend bool operator==(const UrbanObject&, const UrbanObject&) = default;
};

// ---------------------------------------------------------------------------
// Panoramas

enum class Surface : std::uint8_t { Land, Water };

using Timestamp = std::chrono::sys_time<std::chrono::milliseconds>;

/// ISO-8601 "YYYY-MM-DDTHH:MM:SS[.fff][Z|+hh:mm]". Throws ParseError.
Timestamp parse_timestamp(std::string_view text);
/// UTC, "YYYY-MM-DDTHH:MM:SS[.fff]Z".
std::string format_timestamp(Timestamp t);

struct PanoramaMeta {
  std::string id;
  GeoPoint position;
  double heading_deg = 0.0;  // clockwise from north, [0, 360)
  Timestamp timestamp{};
  Surface surface = Surface::Land;
  int width_px = 1400;
  int height_px = 700;
  double roll_deg = 0.0;   // stored, not applied
  double pitch_deg = 0.0;  // stored, not applied

  friend bool operator==(const PanoramaMeta&, const PanoramaMeta&) = default;
};

// ---------------------------------------------------------------------------
// Boxes

struct BBox {
  ObjectClass cls = ObjectClass::Building;
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  std::optional<std::string> object_id;
  std::optional<std::string> link_id;     // shared by the two halves of a seam-split object
  std::optional<double> distance_m;       // camera-to-object, meters
  std::string source;
  Metadata metadata;

  double width() const { return x_max - x_min; }
  double height() const { return y_max - y_min; }
  double area() const { return width() * height(); }

  friend bool operator==(const BBox&, const BBox&) = default;
};

enum class Stage : std::uint8_t { Generated, Refined, HumanAdjusted, HumanVerified, Gold };

std::string_view stage_name(Stage s);
std::optional<Stage> parse_stage(std::string_view text);

struct BoxSet {
  std::string panorama_id;
  int width_px = 1400;
  int height_px = 700;
  std::vector<BBox> boxes;
  Stage stage = Stage::Generated;

  /// Throws Error when `next` precedes the current stage.
  void advance_to(Stage next);

  friend bool operator==(const BoxSet&, const BoxSet&) = default;
};

/// Describes every violated box invariant (clamping, positive extent, linked
/// pair rules). Empty when the set is valid.
std::vector<std::string> check_boxset(const BoxSet& set);

/// Pixel tolerance used when deciding whether a box touches an image edge.
inline constexpr double kEdgeEps = 1e-6;

}  // namespace panolabel
