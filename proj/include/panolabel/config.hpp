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


// Thresholds and knobs shared by the command-line tool, read from a
// "key = value" file. '#' starts a comment.

#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "panolabel/dataset.hpp"
#include "panolabel/geometry.hpp"
#include "panolabel/projection.hpp"
#include "panolabel/refine.hpp"

namespace panolabel {

struct Config {
  MeasureConfig measure;
  CameraHeights camera_heights;
  double forward_x_fraction = 0.5;
  double min_extent_px = 1.0;
  double density_min_separation_m = 2.5;
  RefineConfig refine;
  double rfs_t = 0.1;
  PadConfig pad;
  TileConfig tiles;
  double top_band_px = 50.0;
  double bottom_band_px = 150.0;
  std::size_t n_shards = 120;
  std::array<double, 3> split_targets{0.8, 0.1, 0.1};
  double gold_threshold = 0.4;
  double qualification_threshold = 0.4;
  std::size_t batch_size = 5;
  std::vector<ObjectClass> class_order;  // empty: table order

  /// Throws ParseError naming the line for unknown keys or bad values.
  static Config parse(const std::string& text, const std::string& origin = "config");
  static Config load(const std::filesystem::path& path);

  /// Every key with its current value, in the file format.
  std::string dump() const;
};

}  // namespace panolabel
