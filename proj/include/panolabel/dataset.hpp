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

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "panolabel/core.hpp"
#include "panolabel/metrics.hpp"

namespace panolabel {

enum class SizeBucket : std::uint8_t { Small, Medium, Large };

std::string_view bucket_name(SizeBucket b);

/// COCO area buckets: < 32^2 small, up to 96^2 inclusive medium.
SizeBucket size_bucket(const BBox& box);
SizeBucket size_bucket_for_area(double area);

struct DatasetStats {
  struct PerClass {
    std::size_t instances = 0;
    std::array<std::size_t, 3> buckets{};  // small, medium, large
    std::size_t top_band = 0;
    std::size_t bottom_band = 0;
  };
  std::size_t images = 0;
  std::map<ObjectClass, PerClass> per_class;
  std::map<std::size_t, std::size_t> classes_per_image;    // unique classes -> images
  std::map<std::size_t, std::size_t> instances_per_image;  // instances -> images

  nlohmann::json to_json() const;
  /// One row per class: counts, bucket percentages, band fractions.
  std::string to_csv() const;
};

/// Linked seam pairs count as one instance.
DatasetStats dataset_stats(const std::vector<BoxSet>& sets, double top_band_px = 50.0, double bottom_band_px = 150.0);

enum class Split : std::uint8_t { Train, Val, Test };
std::string_view split_name(Split s);
std::optional<Split> parse_split(std::string_view text);

struct SplitAssignment {
  std::map<std::string, Split> split;
  std::map<std::string, std::string> neighbourhood;

  nlohmann::json to_json() const;
  static SplitAssignment from_json(const nlohmann::json& j);
  friend bool operator==(const SplitAssignment&, const SplitAssignment&) = default;
};

struct SplitRequest {
  std::vector<std::string> images;
  std::map<std::string, std::string> neighbourhoods;  // image id -> neighbourhood id
  std::array<double, 3> targets{0.8, 0.1, 0.1};       // train, val, test
  std::array<std::set<ObjectClass>, 3> required;      // classes each split must contain
  PresenceMap presence;                                // image id -> classes present
  std::uint64_t seed = 0;
};

/// Whole neighbourhoods go to one split. Neighbourhoods holding a required
/// class are pinned first, rarest class first; the rest are assigned largest
/// first to the split with the largest image deficit. Throws Error listing
/// unsatisfiable classes.
SplitAssignment group_split(const SplitRequest& request);

struct SamplingPlan {
  double t = 0.1;
  std::uint64_t seed = 0;
  std::map<ObjectClass, double> class_fraction;
  std::map<ObjectClass, double> class_factor;
  std::map<std::string, double> image_factor;
  std::vector<std::string> epoch;

  double expected_epoch_size() const;
  nlohmann::json to_json() const;
};

/// r_c = max(1, sqrt(t / f_c)); r_i = max over classes in the image (1 with
/// none). The epoch repeats each image floor(r_i) times plus once more with
/// probability frac(r_i).
SamplingPlan repeat_factors(const PresenceMap& presence, double t = 0.1, std::uint64_t seed = 0);

/// One realized epoch for the plan's factors.
std::vector<std::string> sample_epoch(const SamplingPlan& plan, std::mt19937_64& rng);

struct PadConfig {
  double pad_px = 25.0;
  double min_dup_width_px = 20.0;
  double crop_bottom_px = 150.0;
  double crop_top_px = 0.0;
};

/// Detection-ready geometry: both sides padded circularly, linked pairs
/// merged into one box across the seam, boxes reaching `min_dup_width_px`
/// into a mirrored strip duplicated there, and y cropped. Throws
/// GeometryError when the pad reaches the image width or the crops leave no
/// rows.
BoxSet circular_pad(const BoxSet& set, const PadConfig& config = {});

/// Inverse of circular_pad for an input of the given size: duplicates are
/// dropped and merged seam boxes split back into their linked pair. Boxes
/// that lost rows to the crop stay clipped.
BoxSet circular_unpad(const BoxSet& padded, int width_px, int height_px, const PadConfig& config = {});

struct TileConfig {
  double top_crop_px = 50.0;
  double tile_px = 500.0;
  double overlap_px = 25.0;
  int count = 3;
  int output_px = 224;
};

struct Tile {
  int index = 0;
  double x_offset = 0.0;
  double y_offset = 0.0;
  double size_px = 0.0;
  int output_px = 0;
  std::set<ObjectClass> positives;
};

std::vector<double> tile_offsets(const TileConfig& config = {});

/// Tiles of a padded set; a tile is positive for a class when a box of it
/// overlaps the tile window. Throws GeometryError unless the set is exactly
/// covered by the tiles after the top crop.
std::vector<Tile> classification_tiles(const BoxSet& padded, const TileConfig& config = {});

/// Ascending by instance count, ties by id.
std::vector<std::string> curriculum_order(const std::map<std::string, std::size_t>& counts);

/// Round-robin over neighbourhoods (in id order, one counter across all of
/// them) into `n_shards` shards, each in curriculum order.
std::vector<std::vector<std::string>> curriculum_shards(const std::map<std::string, std::size_t>& counts,
                                                        const std::map<std::string, std::string>& neighbourhoods,
                                                        std::size_t n_shards = 120);

}  // namespace panolabel
