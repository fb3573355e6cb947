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


#include "panolabel/coco.hpp"

#include <algorithm>

#include "panolabel/io_util.hpp"

namespace panolabel {

namespace {

std::string id_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ParseError("image_id must be a string or an integer");
}

}  // namespace

nlohmann::json categories_json() {
  auto cats = nlohmann::json::array();
  for (ObjectClass c : all_classes()) {
    cats.push_back({{"id", category_id(c)}, {"name", class_name(c)}, {"supercategory", "urban_object"}});
  }
  return cats;
}

nlohmann::json to_coco(const std::vector<BoxSet>& sets) {
  auto images = nlohmann::json::array();
  auto annotations = nlohmann::json::array();
  long long ann_id = 1;
  for (std::size_t i = 0; i < sets.size(); ++i) {
    const BoxSet& s = sets[i];
    const auto image_id = static_cast<long long>(i + 1);
    images.push_back({{"id", image_id},
                      {"file_name", s.panorama_id + ".jpg"},
                      {"panorama_id", s.panorama_id},
                      {"width", s.width_px},
                      {"height", s.height_px},
                      {"stage", stage_name(s.stage)}});
    for (const BBox& b : s.boxes) {
      nlohmann::json ext = {{"xyxy", {b.x_min, b.y_min, b.x_max, b.y_max}}, {"source", b.source},
                            {"metadata", nlohmann::json(b.metadata)}};
      if (b.object_id) ext["object_id"] = *b.object_id;
      if (b.link_id) ext["link_id"] = *b.link_id;
      if (b.distance_m) ext["distance_m"] = *b.distance_m;
      annotations.push_back({{"id", ann_id++},
                             {"image_id", image_id},
                             {"category_id", category_id(b.cls)},
                             {"bbox", {b.x_min, b.y_min, b.width(), b.height()}},
                             {"area", b.area()},
                             {"iscrowd", 0},
                             {"ext", std::move(ext)}});
    }
  }
  return {{"images", std::move(images)}, {"annotations", std::move(annotations)}, {"categories", categories_json()}};
}

std::vector<BoxSet> from_coco(const nlohmann::json& j) {
  std::vector<BoxSet> sets;
  std::map<long long, std::size_t> index;
  try {
    for (const auto& img : j.at("images")) {
      BoxSet s;
      const long long id = img.at("id").get<long long>();
      s.panorama_id = img.contains("panorama_id") ? img.at("panorama_id").get<std::string>()
                                                  : img.at("file_name").get<std::string>();
      s.width_px = img.at("width").get<int>();
      s.height_px = img.at("height").get<int>();
      if (img.contains("stage")) {
        const auto st = parse_stage(img.at("stage").get<std::string>());
        if (!st) throw ParseError("image " + s.panorama_id + ": unknown stage");
        s.stage = *st;
      }
      if (!index.emplace(id, sets.size()).second) throw ParseError("duplicate image id " + std::to_string(id));
      sets.push_back(std::move(s));
    }
    for (const auto& ann : j.at("annotations")) {
      const std::string where = "annotation " + ann.value("id", nlohmann::json()).dump();
      const auto it = index.find(ann.at("image_id").get<long long>());
      if (it == index.end()) throw ParseError(where + ": unknown image_id");
      const auto cls = class_from_category_id(ann.at("category_id").get<int>());
      if (!cls) throw ParseError(where + ": unknown category_id");
      BBox b;
      b.cls = *cls;
      const nlohmann::json ext = ann.value("ext", nlohmann::json::object());
      if (ext.contains("xyxy")) {
        const auto& c = ext.at("xyxy");
        if (!c.is_array() || c.size() != 4) throw ParseError(where + ": xyxy needs 4 numbers");
        b.x_min = c[0].get<double>();
        b.y_min = c[1].get<double>();
        b.x_max = c[2].get<double>();
        b.y_max = c[3].get<double>();
      } else {
        const auto& c = ann.at("bbox");
        if (!c.is_array() || c.size() != 4) throw ParseError(where + ": bbox needs 4 numbers");
        b.x_min = c[0].get<double>();
        b.y_min = c[1].get<double>();
        b.x_max = b.x_min + c[2].get<double>();
        b.y_max = b.y_min + c[3].get<double>();
      }
      if (!(b.x_max > b.x_min && b.y_max > b.y_min)) throw ParseError(where + ": box without area");
      if (ext.contains("object_id")) b.object_id = ext.at("object_id").get<std::string>();
      if (ext.contains("link_id")) b.link_id = ext.at("link_id").get<std::string>();
      if (ext.contains("distance_m")) b.distance_m = ext.at("distance_m").get<double>();
      if (ext.contains("source")) b.source = ext.at("source").get<std::string>();
      if (ext.contains("metadata")) {
        for (const auto& [k, v] : ext.at("metadata").items()) b.metadata[k] = v;
      }
      sets[it->second].boxes.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("COCO file: ") + e.what());
  }
  return sets;
}

std::string dump_coco(const std::vector<BoxSet>& sets) { return to_coco(sets).dump(1) + "\n"; }

std::filesystem::path boxset_filename(const std::string& panorama_id) {
  std::string name = panorama_id;
  for (char& ch : name) {
    if (ch == '/' || ch == '\\' || ch == ':') ch = '_';
  }
  return name + ".json";
}

void save_boxset(const std::filesystem::path& path, const BoxSet& set) { write_file_atomic(path, dump_coco({set})); }

BoxSet load_boxset(const std::filesystem::path& path) {
  auto sets = from_coco(read_json_file(path));
  if (sets.size() != 1) throw ParseError(path.string() + ": expected exactly one image");
  return std::move(sets.front());
}

std::vector<BoxSet> load_boxset_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ParseError(dir.string() + ": not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<BoxSet> out;
  for (const auto& f : files) {
    try {
      for (auto& s : from_coco(read_json_file(f))) out.push_back(std::move(s));
    } catch (const ParseError& e) {
      throw ParseError(f.string() + ": " + e.what());
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const BoxSet& a, const BoxSet& b) { return a.panorama_id < b.panorama_id; });
  return out;
}

std::vector<Detection> detections_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("detections must be a JSON array");
  std::vector<Detection> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& r = j[i];
    const std::string where = "detection " + std::to_string(i);
    try {
      Detection d;
      d.image_id = id_text(r.at("image_id"));
      const auto cls = class_from_category_id(r.at("category_id").get<int>());
      if (!cls) throw ParseError(where + ": unknown category_id");
      d.cls = *cls;
      const auto& c = r.at("bbox");
      if (!c.is_array() || c.size() != 4) throw ParseError(where + ": bbox needs 4 numbers");
      d.box.cls = d.cls;
      d.box.x_min = c[0].get<double>();
      d.box.y_min = c[1].get<double>();
      d.box.x_max = d.box.x_min + c[2].get<double>();
      d.box.y_max = d.box.y_min + c[3].get<double>();
      d.score = r.at("score").get<double>();
      if (!(d.score >= 0.0 && d.score <= 1.0)) throw ParseError(where + ": score outside [0, 1]");
      if (!(d.box.width() > 0.0 && d.box.height() > 0.0)) throw ParseError(where + ": box without area");
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  return out;
}

}  // namespace panolabel
