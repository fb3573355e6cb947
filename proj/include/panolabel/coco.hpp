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


// COCO-style annotation files. Each annotation carries an "ext" object with
// the exact corner coordinates and the fields COCO has no slot for.

#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "panolabel/core.hpp"
#include "panolabel/metrics.hpp"

namespace panolabel {

nlohmann::json categories_json();

nlohmann::json to_coco(const std::vector<BoxSet>& sets);

/// Throws ParseError with the offending annotation id.
std::vector<BoxSet> from_coco(const nlohmann::json& j);

/// Canonical text: identical sets give identical bytes.
std::string dump_coco(const std::vector<BoxSet>& sets);

void save_boxset(const std::filesystem::path& path, const BoxSet& set);
BoxSet load_boxset(const std::filesystem::path& path);

/// One "<panorama id>.json" per set.
std::filesystem::path boxset_filename(const std::string& panorama_id);

/// All *.json files of a directory, sorted by panorama id.
std::vector<BoxSet> load_boxset_dir(const std::filesystem::path& dir);

/// COCO results list: [{"image_id", "category_id", "bbox", "score"}].
/// Numeric image ids are read as their decimal text.
std::vector<Detection> detections_from_json(const nlohmann::json& j);

}  // namespace panolabel
