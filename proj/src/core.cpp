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

#include "panolabel/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>

namespace panolabel {

double normalize_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;  // fmod of tiny negatives can round up
  return r;
}

double angular_diff(double a_deg, double b_deg) {
  double d = std::fmod(a_deg - b_deg, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

double azimuth(GeoPoint from, GeoPoint to) {
  return normalize_degrees(rad2deg(std::atan2(to.x - from.x, to.y - from.y)));
}

// ---------------------------------------------------------------------------

namespace {

struct ClassInfo {
  ObjectClass cls;
  std::string_view name;
  std::string_view key;
};

constexpr std::array<ClassInfo, kClassCount> kClassInfo{{
    {ObjectClass::AdvertisingColumn, "Advertising Column", "advertising_column"},
    {ObjectClass::BicyclePath, "Bicycle Path", "bicycle_path"},
    {ObjectClass::Building, "Building", "building"},
    {ObjectClass::Bus, "Bus", "bus"},
    {ObjectClass::Bridge, "Bridge", "bridge"},
    {ObjectClass::Ferry, "Ferry", "ferry"},
    {ObjectClass::HighVoltagePylon, "High Voltage Pylon", "high_voltage_pylon"},
    {ObjectClass::Lamppost, "Lamppost", "lamppost"},
    {ObjectClass::Park, "Park", "park"},
    {ObjectClass::Playground, "Playground", "playground"},
    {ObjectClass::PublicToilet, "Public Toilet", "public_toilet"},
    {ObjectClass::PublicTransportStop, "Public Transport Stop", "public_transport_stop"},
    {ObjectClass::RailwayTrack, "Railway Track", "railway_track"},
    {ObjectClass::SportFacility, "Sport Facility", "sport_facility"},
    {ObjectClass::TrafficLight, "Traffic Light", "traffic_light"},
    {ObjectClass::TrafficSign, "Traffic Sign", "traffic_sign"},
    {ObjectClass::Train, "Train", "train"},
    {ObjectClass::Tram, "Tram", "tram"},
    {ObjectClass::TrashContainer, "Trash Container", "trash_container"},
    {ObjectClass::Tree, "Tree", "tree"},
    {ObjectClass::Waterway, "Waterway", "waterway"},
    {ObjectClass::Windturbine, "Windturbine", "windturbine"},
}};

std::string canonical(std::string_view s) {
  std::string out;
  for (char ch : s) {
    if (ch == ' ' || ch == '-' || ch == '_') {
      out.push_back('_');
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    }
  }
  return out;
}

}  // namespace

const std::array<ObjectClass, kClassCount>& all_classes() {
  static const auto classes = [] {
    std::array<ObjectClass, kClassCount> out{};
    for (std::size_t i = 0; i < kClassCount; ++i) out[i] = kClassInfo[i].cls;
    return out;
  }();
  return classes;
}

std::string_view class_name(ObjectClass c) { return kClassInfo[static_cast<std::size_t>(c)].name; }
std::string_view class_key(ObjectClass c) { return kClassInfo[static_cast<std::size_t>(c)].key; }
int category_id(ObjectClass c) { return static_cast<int>(c) + 1; }

std::optional<ObjectClass> parse_class(std::string_view text) {
  const std::string wanted = canonical(text);
  for (const auto& info : kClassInfo) {
    if (wanted == info.key) return info.cls;
  }
  // "Railway Tracks" appears in some sources.
  if (wanted == "railway_tracks") return ObjectClass::RailwayTrack;
  return std::nullopt;
}

std::optional<ObjectClass> class_from_category_id(int id) {
  if (id < 1 || id > static_cast<int>(kClassCount)) return std::nullopt;
  return static_cast<ObjectClass>(id - 1);
}

std::vector<ClassSpec> default_class_specs() {
  using C = ObjectClass;
  // class, width, height, non-blocking, height from elevation
  return {
      {C::AdvertisingColumn, 1.3, 3.2, false, false},
      {C::BicyclePath, 4.0, 1.5, true, false},
      {C::Building, 5.0, 10.0, false, true},
      {C::Bus, 4.0, 2.5, true, false},
      {C::Bridge, 4.0, 2.5, true, true},
      {C::Ferry, 4.0, 3.5, true, false},
      {C::HighVoltagePylon, 15.0, 25.0, false, false},
      {C::Lamppost, 1.0, 6.0, true, false},
      {C::Park, 5.0, 10.0, true, false},
      {C::Playground, 7.0, 2.0, false, false},
      {C::PublicToilet, 1.5, 2.5, false, false},
      {C::PublicTransportStop, 2.5, 2.0, false, false},
      {C::RailwayTrack, 4.0, 1.5, true, false},
      {C::SportFacility, 10.0, 3.0, false, false},
      {C::TrafficLight, 0.5, 2.5, false, false},
      {C::TrafficSign, 0.5, 2.5, false, false},
      {C::Train, 4.0, 4.0, true, false},
      {C::Tram, 4.0, 2.5, true, false},
      {C::TrashContainer, 1.2, 1.5, false, false},
      {C::Tree, 5.0, std::nullopt, true, true},
      {C::Waterway, 4.0, 1.5, true, false},
      {C::Windturbine, 30.0, 50.0, false, false},
  };
}

void validate_class_table(std::span<const ClassSpec> specs) {
  using R = ClassTableError::Reason;
  std::array<bool, kClassCount> seen{};
  for (const auto& s : specs) {
    const auto idx = static_cast<std::size_t>(s.cls);
    const std::string name(class_name(s.cls));
    if (seen[idx]) throw ClassTableError(R::DuplicateClass, s.cls, "duplicate class spec: " + name);
    seen[idx] = true;
    if (!(s.width_estimate > 0.0) || !std::isfinite(s.width_estimate)) {
      throw ClassTableError(R::InvalidEstimate, s.cls, "width estimate must be > 0: " + name);
    }
    if (s.height_estimate && (!(*s.height_estimate > 0.0) || !std::isfinite(*s.height_estimate))) {
      throw ClassTableError(R::InvalidEstimate, s.cls, "height estimate must be > 0: " + name);
    }
    if (!s.height_estimate && !s.height_from_elevation) {
      throw ClassTableError(R::MissingEstimate, s.cls,
                            "height estimate required when height is not elevation-derived: " + name);
    }
  }
}

ClassTable::ClassTable(std::vector<ClassSpec> specs) {
  validate_class_table(specs);
  specs_.resize(kClassCount);
  std::array<bool, kClassCount> seen{};
  for (auto& s : specs) {
    seen[static_cast<std::size_t>(s.cls)] = true;
    specs_[static_cast<std::size_t>(s.cls)] = s;
  }
  for (ObjectClass c : all_classes()) {
    if (!seen[static_cast<std::size_t>(c)]) {
      throw ClassTableError(ClassTableError::Reason::MissingClass, c,
                            "class table lacks " + std::string(class_name(c)));
    }
  }
}

const ClassTable& ClassTable::defaults() {
  static const ClassTable table(default_class_specs());
  return table;
}

// ---------------------------------------------------------------------------

Polyline::Polyline(std::vector<GeoPoint> points) : points_(std::move(points)) {
  if (points_.size() < 2) throw GeometryError("polyline needs at least 2 points");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i].x) || !std::isfinite(points_[i].y)) {
      throw GeometryError("polyline has a non-finite coordinate");
    }
    if (i > 0 && points_[i] == points_[i - 1]) throw GeometryError("polyline has a zero-length segment");
  }
}

Polygon::Polygon(std::vector<GeoPoint> ring) : ring_(std::move(ring)) {
  if (!ring_.empty() && ring_.front() != ring_.back()) ring_.push_back(ring_.front());
  if (ring_.size() < 4) throw GeometryError("polygon needs at least 3 vertices");
  for (const auto& p : ring_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw GeometryError("polygon has a non-finite coordinate");
  }
  const std::size_t n = ring_.size() - 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (ring_[i] == ring_[i + 1]) throw GeometryError("polygon has a repeated vertex");
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
      const GeoPoint a1 = ring_[i], a2 = ring_[i + 1];
      const GeoPoint b1 = ring_[j], b2 = ring_[j + 1];
      if (adjacent) {
        // Adjacent edges share one vertex; they may only meet there.
        const GeoPoint shared = (j == i + 1) ? a2 : a1;
        const GeoPoint a_other = (j == i + 1) ? a1 : a2;
        const GeoPoint b_other = (j == i + 1) ? b2 : b1;
        if (orient(shared, a_other, b_other) == 0.0 && dot(a_other - shared, b_other - shared) > 0.0) {
          throw GeometryError("polygon folds back on itself");
        }
        continue;
      }
      if (segments_intersect(a1, a2, b1, b2)) throw GeometryError("polygon is self-intersecting");
    }
  }
  if (area() == 0.0) throw GeometryError("polygon has zero area");
}

double Polygon::area() const { return std::abs(signed_area(vertices())); }

GeoPoint Polygon::centroid() const {
  const auto v = vertices();
  const GeoPoint o = v[0];  // shift for conditioning
  double a2 = 0.0, cx = 0.0, cy = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const GeoPoint p = v[i] - o;
    const GeoPoint q = v[(i + 1) % v.size()] - o;
    const double c = cross(p, q);
    a2 += c;
    cx += (p.x + q.x) * c;
    cy += (p.y + q.y) * c;
  }
  return {o.x + cx / (3.0 * a2), o.y + cy / (3.0 * a2)};
}

std::pair<GeoPoint, GeoPoint> bounds(const Geometry& g) {
  auto span_bounds = [](std::span<const GeoPoint> pts) {
    GeoPoint lo = pts[0], hi = pts[0];
    for (const auto& p : pts) {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    return std::pair{lo, hi};
  };
  if (const auto* pt = std::get_if<PointGeom>(&g)) return {pt->at, pt->at};
  if (const auto* line = std::get_if<Polyline>(&g)) return span_bounds(line->points());
  return span_bounds(std::get<Polygon>(g).vertices());
}

double geometry_distance(const Geometry& g, GeoPoint p) {
  if (const auto* pt = std::get_if<PointGeom>(&g)) return distance(pt->at, p);
  auto chain = [p](std::span<const GeoPoint> pts) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) best = std::min(best, point_segment_distance(p, pts[i], pts[i + 1]));
    return best;
  };
  if (const auto* line = std::get_if<Polyline>(&g)) return chain(line->points());
  const auto& poly = std::get<Polygon>(g);
  if (strictly_inside(poly.vertices(), p)) return 0.0;
  return chain(poly.ring());
}

// ---------------------------------------------------------------------------

Timestamp parse_timestamp(std::string_view text) {
  using namespace std::chrono;
  const std::string s(text);
  int year = 0, month = 0, day = 0, hour = 0, minute = 0, second = 0, consumed = 0;
  if (std::sscanf(s.c_str(), "%4d-%2d-%2d%*1[T ]%2d:%2d:%2d%n", &year, &month, &day, &hour, &minute, &second,
                  &consumed) != 6) {
    throw ParseError("bad timestamp: " + s);
  }
  const year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
                           std::chrono::day{static_cast<unsigned>(day)}};
  if (!ymd.ok() || hour > 23 || minute > 59 || second > 60) throw ParseError("bad timestamp: " + s);

  std::size_t pos = static_cast<std::size_t>(consumed);
  milliseconds frac{0};
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    int digits = 0;
    long value = 0;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) {
      if (digits < 3) {
        value = value * 10 + (s[pos] - '0');
        ++digits;
      }
      ++pos;
    }
    if (digits == 0) throw ParseError("bad timestamp fraction: " + s);
    while (digits < 3) {
      value *= 10;
      ++digits;
    }
    frac = milliseconds{value};
  }
  minutes offset{0};
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) {
      ++pos;
    } else if ((s[pos] == '+' || s[pos] == '-') && s.size() - pos >= 6) {
      int oh = 0, om = 0;
      if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2) throw ParseError("bad offset: " + s);
      offset = minutes{oh * 60 + om};
      if (s[pos] == '-') offset = -offset;
      pos += 6;
    }
    if (pos != s.size()) throw ParseError("trailing characters in timestamp: " + s);
  }
  const auto local = sys_days{ymd} + hours{hour} + minutes{minute} + seconds{second} + frac;
  return time_point_cast<milliseconds>(local - offset);
}

std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto day = floor<days>(t);
  const year_month_day ymd{day};
  const auto ms = (t - day).count();
  const long long total_s = ms / 1000;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), total_s / 3600,
                (total_s / 60) % 60, total_s % 60);
  std::string out(buf);
  if (ms % 1000 != 0) {
    std::snprintf(buf, sizeof buf, ".%03lld", static_cast<long long>(ms % 1000));
    out += buf;
  }
  return out + "Z";
}

// ---------------------------------------------------------------------------

std::string_view stage_name(Stage s) {
  switch (s) {
    case Stage::Generated: return "generated";
    case Stage::Refined: return "refined";
    case Stage::HumanAdjusted: return "human_adjusted";
    case Stage::HumanVerified: return "human_verified";
    case Stage::Gold: return "gold";
  }
  return "generated";
}

std::optional<Stage> parse_stage(std::string_view text) {
  for (Stage s : {Stage::Generated, Stage::Refined, Stage::HumanAdjusted, Stage::HumanVerified, Stage::Gold}) {
    if (stage_name(s) == text) return s;
  }
  return std::nullopt;
}

void BoxSet::advance_to(Stage next) {
  if (next < stage) {
    throw Error("box set " + panorama_id + " cannot move from stage " + std::string(stage_name(stage)) + " to " +
                std::string(stage_name(next)));
  }
  stage = next;
}

std::vector<std::string> check_boxset(const BoxSet& set) {
  std::vector<std::string> problems;
  const double w = set.width_px;
  const double h = set.height_px;
  std::map<std::string, std::vector<const BBox*>> links;
  for (std::size_t i = 0; i < set.boxes.size(); ++i) {
    const BBox& b = set.boxes[i];
    std::ostringstream where;
    where << set.panorama_id << " box " << i;
    if (!(b.x_min < b.x_max) || !(b.y_min < b.y_max)) problems.push_back(where.str() + ": non-positive extent");
    if (b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > w || b.y_max > h) {
      problems.push_back(where.str() + ": outside image bounds");
    }
    if (b.link_id) links[*b.link_id].push_back(&b);
  }
  for (const auto& [id, members] : links) {
    if (members.size() != 2) {
      problems.push_back(set.panorama_id + " link " + id + ": expected 2 boxes, found " +
                         std::to_string(members.size()));
      continue;
    }
    const BBox& a = *members[0];
    const BBox& b = *members[1];
    const bool a_left = a.x_min <= kEdgeEps, b_left = b.x_min <= kEdgeEps;
    const bool a_right = a.x_max >= w - kEdgeEps, b_right = b.x_max >= w - kEdgeEps;
    if (!((a_left && b_right) || (b_left && a_right))) {
      problems.push_back(set.panorama_id + " link " + id + ": members do not touch opposite extremities");
    }
    if (a.y_min != b.y_min || a.y_max != b.y_max) {
      problems.push_back(set.panorama_id + " link " + id + ": members have different heights");
    }
  }
  return problems;
}

}  // namespace panolabel
