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

#include "panolabel/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <unordered_map>

#include <boost/geometry.hpp>
#include <boost/geometry/index/rtree.hpp>

#include "panolabel/io_util.hpp"

namespace panolabel {

namespace bg = boost::geometry;
namespace bgi = boost::geometry::index;

// ---------------------------------------------------------------------------
// ElevationGrid

ElevationGrid::ElevationGrid(GeoPoint origin, double cell_size, int rows, int cols, std::vector<double> values,
                             double nodata)
    : origin_(origin), cell_size_(cell_size), rows_(rows), cols_(cols), values_(std::move(values)), nodata_(nodata) {
  if (!(cell_size_ > 0.0)) throw ParseError("grid cell size must be > 0");
  if (rows_ <= 0 || cols_ <= 0) throw ParseError("grid must have at least one row and column");
  if (values_.size() != static_cast<std::size_t>(rows_) * static_cast<std::size_t>(cols_)) {
    throw ParseError("grid dimension mismatch: expected " + std::to_string(rows_ * cols_) + " values, got " +
                     std::to_string(values_.size()));
  }
}

GeoPoint ElevationGrid::cell_center(int row, int col) const {
  return {origin_.x + (col + 0.5) * cell_size_, origin_.y + (rows_ - row - 0.5) * cell_size_};
}

std::optional<std::pair<int, int>> ElevationGrid::cell_of(GeoPoint p) const {
  const double fc = (p.x - origin_.x) / cell_size_;
  const double fr_from_south = (p.y - origin_.y) / cell_size_;
  if (!(fc >= 0.0) || !(fr_from_south >= 0.0) || fc > cols_ || fr_from_south > rows_) return std::nullopt;
  const int col = std::min(static_cast<int>(fc), cols_ - 1);
  const int row = rows_ - 1 - std::min(static_cast<int>(fr_from_south), rows_ - 1);
  return std::pair{row, col};
}

std::optional<double> ElevationGrid::sample(GeoPoint p) const {
  const auto cell = cell_of(p);
  if (!cell || is_nodata(cell->first, cell->second)) return std::nullopt;
  return at(cell->first, cell->second);
}

ElevationGrid parse_grid(std::istream& in) {
  std::map<std::string, double> header;
  static const std::vector<std::string> kRequired{"ncols", "nrows", "xllcorner", "yllcorner", "cellsize"};
  std::string line;
  std::size_t line_no = 0;
  std::vector<double> values;
  int ncols = -1;
  int rows_seen = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (std::isalpha(static_cast<unsigned char>(first[0]))) {
      if (rows_seen > 0) throw ParseError("grid line " + std::to_string(line_no) + ": header after data");
      std::string key = first;
      std::transform(key.begin(), key.end(), key.begin(), [](unsigned char c) { return std::tolower(c); });
      double v = 0.0;
      if (!(ls >> v)) throw ParseError("grid line " + std::to_string(line_no) + ": bad header value for " + key);
      header[key] = v;
      continue;
    }
    if (ncols < 0) {
      for (const auto& k : kRequired) {
        if (!header.count(k)) throw ParseError("grid header lacks " + k);
      }
      ncols = static_cast<int>(header["ncols"]);
    }
    std::istringstream row_stream(line);
    std::string token;
    int count = 0;
    while (row_stream >> token) {
      double v = 0.0;
      if (!parse_double(token, v)) {
        throw ParseError("grid line " + std::to_string(line_no) + ": non-numeric cell '" + token + "'");
      }
      values.push_back(v);
      ++count;
    }
    if (count != ncols) {
      throw ParseError("grid line " + std::to_string(line_no) + ": dimension mismatch, expected " +
                       std::to_string(ncols) + " values, got " + std::to_string(count));
    }
    ++rows_seen;
  }
  for (const auto& k : kRequired) {
    if (!header.count(k)) throw ParseError("grid header lacks " + k);
  }
  const int nrows = static_cast<int>(header["nrows"]);
  if (rows_seen != nrows) {
    throw ParseError("grid dimension mismatch: header declares " + std::to_string(nrows) + " rows, found " +
                     std::to_string(rows_seen));
  }
  const double nodata = header.count("nodata_value") ? header["nodata_value"] : -9999.0;
  return ElevationGrid({header["xllcorner"], header["yllcorner"]}, header["cellsize"], nrows,
                       static_cast<int>(header["ncols"]), std::move(values), nodata);
}

ElevationGrid load_grid(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open grid " + path.string());
  try {
    return parse_grid(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_grid(std::ostream& out, const ElevationGrid& grid) {
  out << std::setprecision(17);
  out << "ncols " << grid.cols() << "\n"
      << "nrows " << grid.rows() << "\n"
      << "xllcorner " << grid.origin().x << "\n"
      << "yllcorner " << grid.origin().y << "\n"
      << "cellsize " << grid.cell_size() << "\n"
      << "nodata_value " << grid.nodata() << "\n";
  for (int r = 0; r < grid.rows(); ++r) {
    for (int c = 0; c < grid.cols(); ++c) out << (c ? " " : "") << grid.at(r, c);
    out << "\n";
  }
}

std::optional<double> object_height_from_grids(const UrbanObject& obj, const ElevationGrid& dsm,
                                               const ElevationGrid& dtm, double buffer_m) {
  const bool is_area = std::holds_alternative<Polygon>(obj.geometry);
  auto [lo, hi] = bounds(obj.geometry);
  const double pad = is_area ? 0.0 : buffer_m;
  lo = {lo.x - pad, lo.y - pad};
  hi = {hi.x + pad, hi.y + pad};

  const double cs = dsm.cell_size();
  const int col0 = std::max(0, static_cast<int>(std::floor((lo.x - dsm.origin().x) / cs)));
  const int col1 = std::min(dsm.cols() - 1, static_cast<int>(std::floor((hi.x - dsm.origin().x) / cs)));
  const int south0 = std::max(0, static_cast<int>(std::floor((lo.y - dsm.origin().y) / cs)));
  const int south1 = std::min(dsm.rows() - 1, static_cast<int>(std::floor((hi.y - dsm.origin().y) / cs)));

  std::optional<double> best;
  for (int s = south0; s <= south1; ++s) {
    const int row = dsm.rows() - 1 - s;
    for (int col = col0; col <= col1; ++col) {
      const GeoPoint c = dsm.cell_center(row, col);
      const double d = geometry_distance(obj.geometry, c);
      if (is_area ? d > 0.0 : d > buffer_m) continue;
      if (dsm.is_nodata(row, col)) continue;
      const auto ground = dtm.sample(c);
      if (!ground) continue;
      const double diff = dsm.at(row, col) - *ground;
      if (!best || diff > *best) best = diff;
    }
  }
  if (!best) return std::nullopt;
  return std::max(0.0, *best);
}

// ---------------------------------------------------------------------------
// Class mapping

namespace {

std::string fold(std::string_view s) {
  std::string out;
  for (char ch : s) {
    out.push_back(ch == ' ' || ch == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  return out;
}

}  // namespace

ClassMapping ClassMapping::defaults() {
  ClassMapping m;
  for (ObjectClass c : all_classes()) {
    m.add(std::string(class_key(c)), c);
    m.add(std::string(class_name(c)), c);
  }
  m.add("railway_tracks", ObjectClass::RailwayTrack);
  return m;
}

ClassMapping ClassMapping::load(const std::filesystem::path& path) {
  ClassMapping m = defaults();
  const auto doc = read_json_file(path);
  if (!doc.is_object()) throw ParseError(path.string() + ": class mapping must be a JSON object");
  for (const auto& [tag, target] : doc.items()) {
    if (!target.is_string()) throw ParseError(path.string() + ": mapping for '" + tag + "' is not a string");
    const auto cls = parse_class(target.get<std::string>());
    if (!cls) throw ParseError(path.string() + ": unknown class '" + target.get<std::string>() + "'");
    m.add(tag, *cls);
  }
  return m;
}

void ClassMapping::add(std::string tag, ObjectClass cls) { rules_[fold(tag)] = cls; }

std::optional<ObjectClass> ClassMapping::lookup(std::string_view tag) const {
  const auto it = rules_.find(fold(tag));
  if (it == rules_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// ObjectStore

struct ObjectStore::Index {
  using Point = bg::model::point<double, 2, bg::cs::cartesian>;
  using Box = bg::model::box<Point>;
  using Value = std::pair<Box, std::size_t>;
  bgi::rtree<Value, bgi::rstar<16>> tree;
};

ObjectStore::ObjectStore() : ObjectStore(std::vector<UrbanObject>{}) {}

ObjectStore::ObjectStore(std::vector<UrbanObject> objects)
    : objects_(std::move(objects)), index_(std::make_unique<Index>()) {
  std::vector<Index::Value> entries;
  entries.reserve(objects_.size());
  for (std::size_t i = 0; i < objects_.size(); ++i) {
    const auto [lo, hi] = bounds(objects_[i].geometry);
    entries.emplace_back(Index::Box({lo.x, lo.y}, {hi.x, hi.y}), i);
  }
  index_->tree = decltype(index_->tree)(entries.begin(), entries.end());
}

ObjectStore::ObjectStore(ObjectStore&&) noexcept = default;
ObjectStore& ObjectStore::operator=(ObjectStore&&) noexcept = default;
ObjectStore::~ObjectStore() = default;

std::vector<const UrbanObject*> ObjectStore::query_disk(GeoPoint center, double radius) const {
  std::vector<Index::Value> hits;
  const Index::Box window({center.x - radius, center.y - radius}, {center.x + radius, center.y + radius});
  index_->tree.query(bgi::intersects(window), std::back_inserter(hits));
  std::vector<std::size_t> ids;
  ids.reserve(hits.size());
  for (const auto& [box, i] : hits) {
    if (geometry_distance(objects_[i].geometry, center) <= radius) ids.push_back(i);
  }
  std::sort(ids.begin(), ids.end());
  std::vector<const UrbanObject*> out;
  out.reserve(ids.size());
  for (std::size_t i : ids) out.push_back(&objects_[i]);
  return out;
}

// ---------------------------------------------------------------------------
// GeoJSON

namespace {

GeoPoint coord(const nlohmann::json& c) {
  if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
    throw GeometryError("coordinate must be [x, y]");
  }
  return {c[0].get<double>(), c[1].get<double>()};
}

std::vector<GeoPoint> coord_list(const nlohmann::json& arr) {
  if (!arr.is_array()) throw GeometryError("coordinates must be an array");
  std::vector<GeoPoint> pts;
  pts.reserve(arr.size());
  for (const auto& c : arr) pts.push_back(coord(c));
  return pts;
}

Geometry geometry_from_json(const nlohmann::json& g) {
  if (!g.is_object() || !g.contains("type") || !g.contains("coordinates")) {
    throw GeometryError("feature lacks a geometry");
  }
  const std::string type = g["type"].get<std::string>();
  const auto& coords = g["coordinates"];
  if (type == "Point") return PointGeom{coord(coords)};
  if (type == "LineString") return Polyline(coord_list(coords));
  if (type == "Polygon") {
    // Outer ring only; holes do not affect what a street-level camera sees.
    if (!coords.is_array() || coords.empty()) throw GeometryError("polygon lacks an outer ring");
    return Polygon(coord_list(coords[0]));
  }
  throw GeometryError("unsupported geometry type " + type);
}

nlohmann::json geometry_to_json(const Geometry& g) {
  auto pt = [](GeoPoint p) { return nlohmann::json::array({p.x, p.y}); };
  nlohmann::json out;
  if (const auto* p = std::get_if<PointGeom>(&g)) {
    out["type"] = "Point";
    out["coordinates"] = pt(p->at);
  } else if (const auto* line = std::get_if<Polyline>(&g)) {
    out["type"] = "LineString";
    auto arr = nlohmann::json::array();
    for (const auto& p : line->points()) arr.push_back(pt(p));
    out["coordinates"] = std::move(arr);
  } else {
    out["type"] = "Polygon";
    auto ring = nlohmann::json::array();
    for (const auto& p : std::get<Polygon>(g).ring()) ring.push_back(pt(p));
    out["coordinates"] = nlohmann::json::array({std::move(ring)});
  }
  return out;
}

std::optional<double> positive_property(const nlohmann::json& props, const char* key) {
  if (!props.contains(key) || props[key].is_null()) return std::nullopt;
  if (!props[key].is_number() || !(props[key].get<double>() > 0.0)) {
    throw GeometryError(std::string(key) + " must be a positive number");
  }
  return props[key].get<double>();
}

}  // namespace

LoadedObjects parse_objects(const nlohmann::json& doc, const ClassMapping& mapping) {
  if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" || !doc.contains("features") ||
      !doc["features"].is_array()) {
    throw ParseError("expected a GeoJSON FeatureCollection");
  }
  std::vector<UrbanObject> objects;
  LoadedObjects result;
  const auto& features = doc["features"];
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& f = features[i];
    if (!f.is_object()) {
      result.errors.push_back({i, "feature is not an object"});
      continue;
    }
    const nlohmann::json props = f.contains("properties") && f["properties"].is_object()
                                     ? f["properties"]
                                     : nlohmann::json::object();
    std::optional<ObjectClass> cls;
    if (props.contains("class") && props["class"].is_string()) cls = mapping.lookup(props["class"].get<std::string>());
    if (!cls) {
      ++result.unmapped;
      continue;
    }
    try {
      UrbanObject obj;
      obj.cls = *cls;
      obj.geometry = geometry_from_json(f.value("geometry", nlohmann::json()));
      if (f.contains("id") && f["id"].is_string()) {
        obj.id = f["id"].get<std::string>();
      } else if (f.contains("id") && f["id"].is_number()) {
        obj.id = f["id"].dump();
      } else {
        obj.id = "feature-" + std::to_string(i);
      }
      obj.source = props.value("source", std::string());
      obj.height_override = positive_property(props, "height_m");
      obj.width_override = positive_property(props, "width_m");
      for (const auto& [key, value] : props.items()) {
        if (key == "class" || key == "source" || key == "height_m" || key == "width_m") continue;
        obj.metadata[key] = value;
      }
      objects.push_back(std::move(obj));
    } catch (const nlohmann::json::exception& e) {
      result.errors.push_back({i, e.what()});
    } catch (const GeometryError& e) {
      result.errors.push_back({i, e.what()});
    }
  }
  result.store = ObjectStore(std::move(objects));
  return result;
}

LoadedObjects load_objects(const std::filesystem::path& path, const ClassMapping& mapping) {
  const auto doc = read_json_file(path);
  try {
    return parse_objects(doc, mapping);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

nlohmann::json objects_to_geojson(std::span<const UrbanObject> objects) {
  auto features = nlohmann::json::array();
  for (const auto& obj : objects) {
    nlohmann::json props = nlohmann::json::object();
    for (const auto& [k, v] : obj.metadata) props[k] = v;
    props["class"] = std::string(class_name(obj.cls));
    if (!obj.source.empty()) props["source"] = obj.source;
    if (obj.height_override) props["height_m"] = *obj.height_override;
    if (obj.width_override) props["width_m"] = *obj.width_override;
    features.push_back({{"type", "Feature"},
                        {"id", obj.id},
                        {"geometry", geometry_to_json(obj.geometry)},
                        {"properties", std::move(props)}});
  }
  return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

void save_objects(const std::filesystem::path& path, std::span<const UrbanObject> objects) {
  write_file_atomic(path, objects_to_geojson(objects).dump(1) + "\n");
}

// ---------------------------------------------------------------------------
// Poses

PanoramaMeta pose_from_json(const nlohmann::json& j) {
  try {
    PanoramaMeta p;
    p.id = j.at("id").get<std::string>();
    p.position = {j.at("x").get<double>(), j.at("y").get<double>()};
    p.heading_deg = normalize_degrees(j.at("heading_deg").get<double>());
    const auto& ts = j.contains("timestamp") ? j.at("timestamp") : j.at("timestamp_iso8601");
    p.timestamp = parse_timestamp(ts.get<std::string>());
    const std::string surface = j.value("surface", std::string("land"));
    if (surface == "land") {
      p.surface = Surface::Land;
    } else if (surface == "water") {
      p.surface = Surface::Water;
    } else {
      throw ParseError("surface must be \"land\" or \"water\", got \"" + surface + "\"");
    }
    p.width_px = j.value("width_px", 1400);
    p.height_px = j.value("height_px", 700);
    p.roll_deg = j.value("roll_deg", 0.0);
    p.pitch_deg = j.value("pitch_deg", 0.0);
    if (p.height_px <= 0 || p.width_px != 2 * p.height_px) {
      throw ParseError("equirectangular image must be twice as wide as tall");
    }
    if (!std::isfinite(p.position.x) || !std::isfinite(p.position.y) || !std::isfinite(p.heading_deg)) {
      throw ParseError("pose has non-finite position or heading");
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("bad pose record: ") + e.what());
  }
}

nlohmann::json pose_to_json(const PanoramaMeta& p) {
  return {{"id", p.id},
          {"x", p.position.x},
          {"y", p.position.y},
          {"heading_deg", p.heading_deg},
          {"timestamp", format_timestamp(p.timestamp)},
          {"surface", p.surface == Surface::Water ? "water" : "land"},
          {"width_px", p.width_px},
          {"height_px", p.height_px},
          {"roll_deg", p.roll_deg},
          {"pitch_deg", p.pitch_deg}};
}

std::vector<PanoramaMeta> parse_poses(std::istream& in) {
  std::vector<PanoramaMeta> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(pose_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("poses line " + std::to_string(line_no) + ": " + e.what());
    } catch (const ParseError& e) {
      throw ParseError("poses line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::vector<PanoramaMeta> load_poses(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open poses " + path.string());
  try {
    return parse_poses(in);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_poses(std::ostream& out, std::span<const PanoramaMeta> poses) {
  for (const auto& p : poses) out << pose_to_json(p).dump() << "\n";
}

std::vector<PanoramaMeta> density_filter(std::span<const PanoramaMeta> panos, double min_sep) {
  if (!(min_sep > 0.0)) throw Error("density filter separation must be > 0");
  std::vector<const PanoramaMeta*> order;
  order.reserve(panos.size());
  for (const auto& p : panos) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(), [](const PanoramaMeta* a, const PanoramaMeta* b) {
    if (a->timestamp != b->timestamp) return a->timestamp > b->timestamp;
    return a->id < b->id;
  });

  struct CellHash {
    std::size_t operator()(const std::pair<long long, long long>& c) const {
      return std::hash<long long>()(c.first * 73856093LL ^ c.second * 19349663LL);
    }
  };
  std::unordered_map<std::pair<long long, long long>, std::vector<GeoPoint>, CellHash> grid;
  auto cell_of = [min_sep](GeoPoint p) {
    return std::pair{static_cast<long long>(std::floor(p.x / min_sep)),
                     static_cast<long long>(std::floor(p.y / min_sep))};
  };

  std::vector<PanoramaMeta> kept;
  for (const PanoramaMeta* p : order) {
    const auto [cx, cy] = cell_of(p->position);
    bool clear = true;
    for (long long dx = -1; dx <= 1 && clear; ++dx) {
      for (long long dy = -1; dy <= 1 && clear; ++dy) {
        const auto it = grid.find({cx + dx, cy + dy});
        if (it == grid.end()) continue;
        for (const GeoPoint q : it->second) {
          if (distance(q, p->position) < min_sep) {
            clear = false;
            break;
          }
        }
      }
    }
    if (!clear) continue;
    grid[{cx, cy}].push_back(p->position);
    kept.push_back(*p);
  }
  return kept;
}

// ---------------------------------------------------------------------------

namespace {
constexpr double kEarthRadiusM = 6371008.8;
}

LocalProjection::LocalProjection(double origin_lat_deg, double origin_lon_deg)
    : lat0_(deg2rad(origin_lat_deg)), lon0_(deg2rad(origin_lon_deg)) {}

GeoPoint LocalProjection::forward(double lat_deg, double lon_deg) const {
  const double lat = deg2rad(lat_deg);
  const double dlon = deg2rad(lon_deg) - lon0_;
  const double dlat = lat - lat0_;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat0_) * std::cos(lat) * std::sin(dlon / 2) * std::sin(dlon / 2);
  const double c = 2.0 * std::asin(std::min(1.0, std::sqrt(h)));
  const double k = c == 0.0 ? 1.0 : c / std::sin(c);
  const double x = kEarthRadiusM * k * std::cos(lat) * std::sin(dlon);
  const double y = kEarthRadiusM * k *
                   (std::cos(lat0_) * std::sin(lat) - std::sin(lat0_) * std::cos(lat) * std::cos(dlon));
  return {x, y};
}

}  // namespace panolabel
