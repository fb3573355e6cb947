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


#include "panolabel/config.hpp"

#include <functional>
#include <map>
#include <sstream>

#include "panolabel/io_util.hpp"

namespace panolabel {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<ObjectClass> parse_classes(const std::string& value) {
  std::vector<ObjectClass> out;
  for (const auto& item : split_list(value)) {
    const auto c = parse_class(item);
    if (!c) throw ParseError("unknown class '" + item + "'");
    out.push_back(*c);
  }
  return out;
}

std::string join_classes(const std::vector<ObjectClass>& classes) {
  std::string out;
  for (ObjectClass c : classes) out += (out.empty() ? "" : ",") + std::string(class_key(c));
  return out;
}

struct Field {
  std::function<void(Config&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

double to_double(const std::string& v) {
  double d = 0.0;
  if (!parse_double(v, d)) throw ParseError("'" + v + "' is not a number");
  return d;
}

std::size_t to_count(const std::string& v) {
  const double d = to_double(v);
  if (d < 0.0 || d != static_cast<double>(static_cast<std::size_t>(d))) throw ParseError("'" + v + "' is not a count");
  return static_cast<std::size_t>(d);
}

#define PANOLABEL_NUM(key, member)                                              \
  {                                                                             \
    key, {[](Config& c, const std::string& v) { c.member = to_double(v); },     \
          [](const Config& c) { return fmt(c.member); }}                        \
  }
#define PANOLABEL_COUNT(key, member)                                            \
  {                                                                             \
    key, {[](Config& c, const std::string& v) { c.member = to_count(v); },      \
          [](const Config& c) { return std::to_string(c.member); }}             \
  }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> kFields = {
      PANOLABEL_NUM("radius_m", measure.radius_m),
      PANOLABEL_NUM("fallback_height_m", measure.fallback_height_m),
      PANOLABEL_NUM("min_distance_m", measure.min_distance_m),
      PANOLABEL_NUM("footprint_buffer_m", measure.footprint_buffer_m),
      PANOLABEL_NUM("camera_height_land_m", camera_heights.land_m),
      PANOLABEL_NUM("camera_height_water_m", camera_heights.water_m),
      PANOLABEL_NUM("forward_x_fraction", forward_x_fraction),
      PANOLABEL_NUM("min_extent_px", min_extent_px),
      PANOLABEL_NUM("density_min_separation_m", density_min_separation_m),
      PANOLABEL_NUM("tree_threshold", refine.tree_threshold),
      PANOLABEL_NUM("general_threshold", refine.general_threshold),
      PANOLABEL_NUM("merge_min_iou", refine.merge_min_iou),
      PANOLABEL_NUM("rfs_t", rfs_t),
      PANOLABEL_NUM("pad_px", pad.pad_px),
      PANOLABEL_NUM("min_dup_width_px", pad.min_dup_width_px),
      PANOLABEL_NUM("crop_bottom_px", pad.crop_bottom_px),
      PANOLABEL_NUM("crop_top_px", pad.crop_top_px),
      PANOLABEL_NUM("tile_top_crop_px", tiles.top_crop_px),
      PANOLABEL_NUM("tile_px", tiles.tile_px),
      PANOLABEL_NUM("tile_overlap_px", tiles.overlap_px),
      PANOLABEL_NUM("top_band_px", top_band_px),
      PANOLABEL_NUM("bottom_band_px", bottom_band_px),
      PANOLABEL_COUNT("n_shards", n_shards),
      PANOLABEL_NUM("split_train", split_targets[0]),
      PANOLABEL_NUM("split_val", split_targets[1]),
      PANOLABEL_NUM("split_test", split_targets[2]),
      PANOLABEL_NUM("gold_threshold", gold_threshold),
      PANOLABEL_NUM("qualification_threshold", qualification_threshold),
      PANOLABEL_COUNT("batch_size", batch_size),
      {"non_blocking",
       {[](Config& c, const std::string& v) {
          const auto list = parse_classes(v);
          c.refine.non_blocking = ClassSet(list.begin(), list.end());
        },
        [](const Config& c) {
          return join_classes(std::vector<ObjectClass>(c.refine.non_blocking.begin(), c.refine.non_blocking.end()));
        }}},
      {"class_order",
       {[](Config& c, const std::string& v) { c.class_order = parse_classes(v); },
        [](const Config& c) { return join_classes(c.class_order); }}},
  };
  return kFields;
}

#undef PANOLABEL_NUM
#undef PANOLABEL_COUNT

}  // namespace

Config Config::parse(const std::string& text, const std::string& origin) {
  Config cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = origin + ":" + std::to_string(n) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(where + "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = fields().find(key);
    if (it == fields().end()) throw ParseError(where + "unknown key '" + key + "'");
    try {
      it->second.set(cfg, value);
    } catch (const ParseError& e) {
      throw ParseError(where + key + ": " + e.what());
    }
  }
  return cfg;
}

Config Config::load(const std::filesystem::path& path) { return parse(read_text_file(path), path.string()); }

std::string Config::dump() const {
  std::string out;
  for (const auto& [key, f] : fields()) out += key + " = " + f.get(*this) + "\n";
  return out;
}

}  // namespace panolabel
