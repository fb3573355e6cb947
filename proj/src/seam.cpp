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

#include "panolabel/seam.hpp"

#include <algorithm>
#include <map>

namespace panolabel {

std::vector<SeamInstance> seam_instances(const BoxSet& set) {
  const double w = set.width_px;
  std::map<std::string, std::vector<std::size_t>> links;
  for (std::size_t i = 0; i < set.boxes.size(); ++i) {
    if (set.boxes[i].link_id) links[*set.boxes[i].link_id].push_back(i);
  }

  std::vector<bool> consumed(set.boxes.size(), false);
  std::vector<SeamInstance> out;
  for (std::size_t i = 0; i < set.boxes.size(); ++i) {
    if (consumed[i]) continue;
    const BBox& b = set.boxes[i];
    SeamInstance inst;
    if (b.link_id) {
      const auto& group = links[*b.link_id];
      if (group.size() == 2) {
        const std::size_t j = group[0] == i ? group[1] : group[0];
        const BBox& other = set.boxes[j];
        const BBox* right = nullptr;
        const BBox* left = nullptr;
        std::size_t ri = 0, li = 0;
        if (b.x_max >= w - kEdgeEps && other.x_min <= kEdgeEps) {
          right = &b, left = &other, ri = i, li = j;
        } else if (other.x_max >= w - kEdgeEps && b.x_min <= kEdgeEps) {
          right = &other, left = &b, ri = j, li = i;
        }
        if (right && left && right->y_min == left->y_min && right->y_max == left->y_max) {
          inst.members = {ri, li};
          inst.x0 = right->x_min;
          inst.x1 = w + left->x_max;
          inst.y0 = right->y_min;
          inst.y1 = right->y_max;
          consumed[i] = consumed[j] = true;
          out.push_back(std::move(inst));
          continue;
        }
      }
    }
    inst.members = {i};
    inst.x0 = b.x_min;
    inst.x1 = b.x_max;
    inst.y0 = b.y_min;
    inst.y1 = b.y_max;
    consumed[i] = true;
    out.push_back(std::move(inst));
  }
  return out;
}

double arc_overlap(double a0, double a1, double b0, double b1, double period) {
  double total = 0.0;
  for (int k = -2; k <= 2; ++k) {
    const double lo = std::max(a0, b0 + k * period);
    const double hi = std::min(a1, b1 + k * period);
    if (hi > lo) total += hi - lo;
  }
  return total;
}

double seam_intersection(const SeamInstance& a, const SeamInstance& b, double period) {
  const double dy = std::min(a.y1, b.y1) - std::max(a.y0, b.y0);
  if (dy <= 0.0) return 0.0;
  return arc_overlap(a.x0, a.x1, b.x0, b.x1, period) * dy;
}

double best_lift(double a0, double a1, double b0, double b1, double period) {
  double best_shift = 0.0;
  double best_len = -1.0;
  for (int k = -1; k <= 1; ++k) {
    const double len = std::min(a1, b1 + k * period) - std::max(a0, b0 + k * period);
    if (len > best_len) {
      best_len = len;
      best_shift = k * period;
    }
  }
  return b0 + best_shift;
}

}  // namespace panolabel
