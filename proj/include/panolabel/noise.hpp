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


// Annotation-noise analysis between a noisy and a clean annotation of the
// same panoramas.

#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "panolabel/core.hpp"

namespace panolabel {

/// Intersection over union. Throws GeometryError for a box without area.
double iou(const BBox& a, const BBox& b);

/// IoU minus the empty share of the smallest enclosing box, in (-1, 1].
double giou(const BBox& a, const BBox& b);

enum class MatchCost { IoU, GIoU, CoordL2 };

/// Optimal one-to-one matching of min(|noisy|, |clean|) pairs: maximal total
/// IoU or GIoU, or minimal total coordinate distance for CoordL2. Pairs are
/// (noisy index, clean index), sorted by noisy index.
std::vector<std::pair<std::size_t, std::size_t>> match_boxes(const std::vector<BBox>& noisy,
                                                             const std::vector<BBox>& clean, MatchCost cost);

/// Boxes of a set with each valid linked pair replaced by one box in the
/// extended x range [-width, 2 * width], placed on the side of its wider
/// member.
std::vector<BBox> unrolled_boxes(const BoxSet& set);

/// Five-point summary with linear interpolation; empty input gives nothing.
struct Quantiles {
  double min = 0.0, q25 = 0.0, median = 0.0, q75 = 0.0, max = 0.0;
};
std::optional<Quantiles> quantiles(std::vector<double> values);

struct ClassOverlap {
  std::size_t noisy_total = 0;
  std::size_t clean_total = 0;
  std::size_t matched = 0;
  std::vector<double> ious;
  std::vector<double> gious;

  std::optional<double> matched_noisy_fraction() const;
  std::optional<double> matched_clean_fraction() const;
};

struct CoordShift {
  double dx_min = 0.0, dy_min = 0.0, dx_max = 0.0, dy_max = 0.0;  // noisy - clean
};

struct MatchReport {
  std::map<ObjectClass, ClassOverlap> per_class;
  std::vector<CoordShift> shifts;

  /// Appends `other`; associative, so per-image reports may be reduced in
  /// any grouping.
  void merge(const MatchReport& other);
  nlohmann::json to_json() const;
};

struct ClassLabels {
  std::size_t tp = 0, fp = 0, fn = 0;

  std::optional<double> precision() const;
  std::optional<double> recall() const;
};

struct LabelReport {
  std::map<ObjectClass, ClassLabels> per_class;
  std::vector<std::pair<std::string, double>> image_accuracy;  // panorama id, share of classes agreeing

  void merge(const LabelReport& other);
  nlohmann::json to_json() const;
};

/// Per-image pieces. Both sets must describe the same panorama.
MatchReport overlap_report(const BoxSet& noisy, const BoxSet& clean);
std::vector<CoordShift> shift_report(const BoxSet& noisy, const BoxSet& clean);
LabelReport label_report(const BoxSet& noisy, const BoxSet& clean);

/// Collections are paired by panorama id; differing id sets throw Error.
MatchReport overlap_report(const std::vector<BoxSet>& noisy, const std::vector<BoxSet>& clean);
std::vector<CoordShift> shift_report(const std::vector<BoxSet>& noisy, const std::vector<BoxSet>& clean);
LabelReport label_report(const std::vector<BoxSet>& noisy, const std::vector<BoxSet>& clean);

/// Collections paired by panorama id, in id order. Throws on mismatch.
std::vector<std::pair<const BoxSet*, const BoxSet*>> pair_by_panorama(const std::vector<BoxSet>& noisy,
                                                                     const std::vector<BoxSet>& clean);

/// "bin_lo,bin_hi,count" rows over [lo, hi] with `bins` equal bins; values
/// outside are clamped into the end bins.
std::string histogram_csv(const std::vector<double>& values, double lo, double hi, int bins);

}  // namespace panolabel
