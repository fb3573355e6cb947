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

#include <vector>

#include "panolabel/core.hpp"

namespace panolabel {

/// One object on the panorama cylinder. A valid linked pair collapses into a
/// single instance whose x range runs past the right edge:
/// x0 in [0, width), x0 < x1 <= x0 + width.
struct SeamInstance {
  std::vector<std::size_t> members;  // indices into BoxSet::boxes, right member first
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;

  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
  bool linked() const { return members.size() == 2; }
};

/// Instances in order of their first member. Link ids that do not form a
/// valid pair are ignored and their boxes stand alone.
std::vector<SeamInstance> seam_instances(const BoxSet& set);

/// Length of the intersection of two arcs [a0, a1] and [b0, b1] on a circle
/// of circumference `period`. Each arc must be no longer than `period`.
double arc_overlap(double a0, double a1, double b0, double b1, double period);

/// Intersection area of two instances on the cylinder.
double seam_intersection(const SeamInstance& a, const SeamInstance& b, double period);

/// The lift b0 + k * period (k in -1..1) whose interval overlaps [a0, a1]
/// most.
double best_lift(double a0, double a1, double b0, double b1, double period);

}  // namespace panolabel
