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

// Occlusion handling for generated boxes.
//
// Every rule treats a linked seam pair as one object on the 360-degree
// cylinder: the pair is kept, shrunk or removed as a whole, and overlaps are
// measured across the seam. "Nearer" means smaller distance_m; equal
// distances rank the larger box as nearer, then the smaller object id.
// Rules only let surviving boxes occlude.

#pragma once

#include <set>

#include "panolabel/core.hpp"

namespace panolabel {

using ClassSet = std::set<ObjectClass>;

/// Classes flagged non-blocking in the table.
ClassSet non_blocking_classes(const ClassTable& table);

/// area(a intersect b) / area(a): the share of `a` hidden by `b`. Throws
/// Error when `a` has no area.
double overlap_fraction(const BBox& a, const BBox& b);

/// Removes boxes entirely covered by a nearer building; pulls the x edge of
/// partially covered boxes back to the building's edge.
BoxSet refine_buildings(const BoxSet& set);

/// Removes trees covered by more than `threshold` by a nearer surviving tree.
BoxSet refine_trees(const BoxSet& set, double threshold = 0.30);

/// Merges same-class boxes from different sources whose IoU >= min_iou into
/// their union, keeping the metadata of every member.
BoxSet merge_duplicates(const BoxSet& set, double min_iou = 0.5);

/// Removes boxes covered by more than `threshold` by a nearer surviving box
/// of a blocking class.
BoxSet refine_general(const BoxSet& set, double threshold, const ClassSet& non_blocking);
BoxSet refine_general(const BoxSet& set, double threshold = 0.80,
                      const ClassTable& specs = ClassTable::defaults());

struct RefineConfig {
  double tree_threshold = 0.30;
  double general_threshold = 0.80;
  double merge_min_iou = 0.5;
  ClassSet non_blocking = non_blocking_classes(ClassTable::defaults());
};

/// Buildings, trees, duplicate merge, general occlusion, in that order.
/// Requires a Generated set; the result is Refined.
BoxSet refine_pipeline(const BoxSet& set, const RefineConfig& config = {});

}  // namespace panolabel
