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

#include "panolabel/refine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "panolabel/seam.hpp"

namespace panolabel {

namespace {

// Coverage at or above this counts as "entirely" covered.
constexpr double kFullCover = 1.0 - 1e-9;
constexpr double kMinExtentPx = 1.0;

/// Working copy of one seam instance during a rule.
struct Item {
  SeamInstance inst;
  BBox proto;  // first member, carrying class, distance, metadata
  bool modified = false;
  std::size_t order = 0;  // first member index, for stable output order
};

std::vector<Item> make_items(const BoxSet& set) {
  std::vector<Item> items;
  for (auto& inst : seam_instances(set)) {
    Item it;
    it.proto = set.boxes[inst.members.front()];
    it.order = *std::min_element(inst.members.begin(), inst.members.end());
    it.inst = std::move(inst);
    if (!it.proto.distance_m) {
      throw Error("box refinement needs distance_m on every box (panorama " + set.panorama_id + ")");
    }
    items.push_back(std::move(it));
  }
  return items;
}

/// True when a ranks as nearer to the camera than b.
bool nearer(const Item& a, const Item& b) {
  if (*a.proto.distance_m != *b.proto.distance_m) return *a.proto.distance_m < *b.proto.distance_m;
  if (a.inst.area() != b.inst.area()) return a.inst.area() > b.inst.area();
  const std::string ida = a.proto.object_id.value_or("");
  const std::string idb = b.proto.object_id.value_or("");
  if (ida != idb) return ida < idb;
  return a.order < b.order;
}

std::vector<std::size_t> nearness_order(const std::vector<Item>& items) {
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return nearer(items[a], items[b]); });
  return idx;
}

double coverage(const SeamInstance& a, const SeamInstance& b, double period) {
  return seam_intersection(a, b, period) / a.area();
}

/// Writes surviving items back as boxes, preserving the original order.
/// Untouched items reuse their original boxes verbatim.
BoxSet emit(const BoxSet& in, std::vector<Item> items, const std::vector<bool>& alive) {
  const double w = in.width_px;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (alive[i]) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return items[a].order < items[b].order; });

  BoxSet out;
  out.panorama_id = in.panorama_id;
  out.width_px = in.width_px;
  out.height_px = in.height_px;
  out.stage = in.stage;
  std::vector<std::pair<std::size_t, BBox>> placed;  // original index of the first member, box
  auto put = [&](std::size_t key, BBox b) { placed.emplace_back(key, std::move(b)); };
  for (std::size_t i : idx) {
    Item& it = items[i];
    if (!it.modified) {
      for (std::size_t m : it.inst.members) put(m, in.boxes[m]);
      continue;
    }
    double x0 = it.inst.x0;
    double x1 = it.inst.x1;
    if (x0 >= w) {
      x0 -= w;
      x1 -= w;
    } else if (x0 < 0.0) {
      x0 += w;
      x1 += w;
    }
    BBox box = it.proto;
    box.y_min = it.inst.y0;
    box.y_max = it.inst.y1;
    if (x1 <= w) {
      if (x1 - x0 < kMinExtentPx) continue;
      box.x_min = x0;
      box.x_max = x1;
      box.link_id.reset();
      put(it.order, std::move(box));
      continue;
    }
    BBox right = box, left = box;
    right.x_min = x0;
    right.x_max = w;
    left.x_min = 0.0;
    left.x_max = x1 - w;
    const bool keep_right = right.width() >= kMinExtentPx;
    const bool keep_left = left.width() >= kMinExtentPx;
    if (keep_right && keep_left) {
      const std::string link = box.link_id.value_or("link:" + box.object_id.value_or(std::to_string(it.order)));
      right.link_id = link;
      left.link_id = link;
      put(it.order, std::move(right));
      put(it.order, std::move(left));
    } else if (keep_right || keep_left) {
      BBox& only = keep_right ? right : left;
      only.link_id.reset();
      put(it.order, std::move(only));
    }
  }
  std::stable_sort(placed.begin(), placed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (auto& [_, b] : placed) out.boxes.push_back(std::move(b));
  return out;
}

/// Pulls back one x edge of `a` to clear the largest remaining overlap with
/// any occluder. Returns false when no occluder overlap can be removed by an
/// x adjustment.
bool shrink_once(SeamInstance& a, const std::vector<const SeamInstance*>& occluders, double period) {
  double best_cut = 0.0;
  double new_x0 = a.x0, new_x1 = a.x1;
  for (const SeamInstance* b : occluders) {
    if (std::min(a.y1, b->y1) <= std::max(a.y0, b->y0)) continue;
    for (int k = -2; k <= 2; ++k) {
      const double bl = b->x0 + k * period;
      const double br = b->x1 + k * period;
      if (std::min(a.x1, br) <= std::max(a.x0, bl)) continue;
      if (bl <= a.x0 && br >= a.x1) continue;  // covers the full width; x cannot resolve it
      double cut = 0.0, c0 = a.x0, c1 = a.x1;
      if (bl <= a.x0) {
        cut = br - a.x0;
        c0 = br;
      } else if (br >= a.x1) {
        cut = a.x1 - bl;
        c1 = bl;
      } else if (bl - a.x0 >= a.x1 - br) {
        cut = a.x1 - bl;  // keep the wider left remainder
        c1 = bl;
      } else {
        cut = br - a.x0;
        c0 = br;
      }
      if (cut > best_cut) {
        best_cut = cut;
        new_x0 = c0;
        new_x1 = c1;
      }
    }
  }
  if (best_cut <= 0.0) return false;
  a.x0 = new_x0;
  a.x1 = new_x1;
  return true;
}

}  // namespace

ClassSet non_blocking_classes(const ClassTable& table) {
  ClassSet out;
  for (const auto& spec : table.specs()) {
    if (spec.non_blocking) out.insert(spec.cls);
  }
  return out;
}

double overlap_fraction(const BBox& a, const BBox& b) {
  if (!(a.area() > 0.0)) throw Error("overlap fraction of a box without area");
  const double dx = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double dy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (dx <= 0.0 || dy <= 0.0) return 0.0;
  return dx * dy / a.area();
}

BoxSet refine_buildings(const BoxSet& set) {
  const double w = set.width_px;
  auto items = make_items(set);
  std::vector<bool> alive(items.size(), true);
  std::vector<std::size_t> survivors;  // buildings only, nearest first
  for (std::size_t i : nearness_order(items)) {
    Item& a = items[i];
    std::vector<const SeamInstance*> occluders;
    for (std::size_t j : survivors) occluders.push_back(&items[j].inst);

    bool removed = false;
    while (true) {
      if (a.inst.width() < kMinExtentPx) {
        removed = true;
        break;
      }
      const bool hidden = std::any_of(occluders.begin(), occluders.end(),
                                      [&](const SeamInstance* b) { return coverage(a.inst, *b, w) >= kFullCover; });
      if (hidden) {
        removed = true;
        break;
      }
      if (!shrink_once(a.inst, occluders, w)) break;
      a.modified = true;
    }
    if (removed) {
      alive[i] = false;
      continue;
    }
    if (a.proto.cls == ObjectClass::Building) survivors.push_back(i);
  }
  return emit(set, std::move(items), alive);
}

BoxSet refine_trees(const BoxSet& set, double threshold) {
  const double w = set.width_px;
  auto items = make_items(set);
  std::vector<bool> alive(items.size(), true);
  std::vector<std::size_t> kept;
  for (std::size_t i : nearness_order(items)) {
    if (items[i].proto.cls != ObjectClass::Tree) continue;
    const bool occluded = std::any_of(kept.begin(), kept.end(), [&](std::size_t j) {
      return coverage(items[i].inst, items[j].inst, w) > threshold;
    });
    if (occluded) {
      alive[i] = false;
    } else {
      kept.push_back(i);
    }
  }
  return emit(set, std::move(items), alive);
}

BoxSet merge_duplicates(const BoxSet& set, double min_iou) {
  if (!(min_iou > 0.0 && min_iou <= 1.0)) throw Error("merge IoU threshold must be in (0, 1]");
  const double w = set.width_px;
  auto items = make_items(set);

  struct Group {
    std::vector<std::size_t> members;  // item indices, nearest first
    std::set<std::string> sources;
    SeamInstance box;
  };
  std::vector<Group> groups;
  for (std::size_t i : nearness_order(items)) {
    const Item& a = items[i];
    Group* target = nullptr;
    for (auto& g : groups) {
      if (items[g.members.front()].proto.cls != a.proto.cls) continue;
      if (g.sources.count(a.proto.source)) continue;
      const double inter = seam_intersection(a.inst, g.box, w);
      const double iou = inter / (a.inst.area() + g.box.area() - inter);
      if (iou >= min_iou) {
        target = &g;
        break;
      }
    }
    if (!target) {
      groups.push_back({{i}, {a.proto.source}, a.inst});
      continue;
    }
    const double lift = best_lift(target->box.x0, target->box.x1, a.inst.x0, a.inst.x1, w);
    const double shift = lift - a.inst.x0;
    target->box.x0 = std::min(target->box.x0, a.inst.x0 + shift);
    target->box.x1 = std::max(target->box.x1, a.inst.x1 + shift);
    if (target->box.x1 - target->box.x0 > w) target->box.x1 = target->box.x0 + w;
    target->box.y0 = std::min(target->box.y0, a.inst.y0);
    target->box.y1 = std::max(target->box.y1, a.inst.y1);
    target->members.push_back(i);
    target->sources.insert(a.proto.source);
  }

  std::vector<bool> alive(items.size(), false);
  for (auto& g : groups) {
    const std::size_t head = g.members.front();
    alive[head] = true;
    if (g.members.size() == 1) continue;
    Item& it = items[head];
    it.modified = true;
    it.inst.x0 = g.box.x0;
    it.inst.x1 = g.box.x1;
    it.inst.y0 = g.box.y0;
    it.inst.y1 = g.box.y1;
    it.order = items[*std::min_element(g.members.begin(), g.members.end(), [&](std::size_t a, std::size_t b) {
                 return items[a].order < items[b].order;
               })].order;

    // Metadata union: a key whose values disagree is kept once per source.
    std::map<std::string, std::vector<std::size_t>> holders;
    for (std::size_t m : g.members) {
      for (const auto& [key, value] : items[m].proto.metadata) holders[key].push_back(m);
    }
    Metadata merged;
    for (const auto& [key, ms] : holders) {
      const auto& first = items[ms.front()].proto.metadata.at(key);
      const bool agree = std::all_of(ms.begin(), ms.end(),
                                     [&](std::size_t m) { return items[m].proto.metadata.at(key) == first; });
      if (agree) {
        merged[key] = first;
      } else {
        for (std::size_t m : ms) merged[items[m].proto.source + ":" + key] = items[m].proto.metadata.at(key);
      }
    }
    auto ids = nlohmann::json::array();
    std::string joined;
    for (const auto& s : g.sources) joined += (joined.empty() ? "" : "+") + s;
    for (std::size_t m : g.members) ids.push_back(items[m].proto.object_id.value_or(""));
    merged["merged_object_ids"] = std::move(ids);
    it.proto.metadata = std::move(merged);
    it.proto.source = joined;
  }
  return emit(set, std::move(items), alive);
}

BoxSet refine_general(const BoxSet& set, double threshold, const ClassSet& non_blocking) {
  const double w = set.width_px;
  auto items = make_items(set);
  std::vector<bool> alive(items.size(), true);
  std::vector<std::size_t> kept;
  for (std::size_t i : nearness_order(items)) {
    const bool occluded = std::any_of(kept.begin(), kept.end(), [&](std::size_t j) {
      return !non_blocking.count(items[j].proto.cls) && coverage(items[i].inst, items[j].inst, w) > threshold;
    });
    if (occluded) {
      alive[i] = false;
    } else {
      kept.push_back(i);
    }
  }
  return emit(set, std::move(items), alive);
}

BoxSet refine_general(const BoxSet& set, double threshold, const ClassTable& specs) {
  return refine_general(set, threshold, non_blocking_classes(specs));
}

BoxSet refine_pipeline(const BoxSet& set, const RefineConfig& config) {
  if (set.stage != Stage::Generated) {
    throw Error("refinement expects a generated box set, got stage " + std::string(stage_name(set.stage)));
  }
  BoxSet out = refine_buildings(set);
  out = refine_trees(out, config.tree_threshold);
  out = merge_duplicates(out, config.merge_min_iou);
  out = refine_general(out, config.general_threshold, config.non_blocking);
  out.advance_to(Stage::Refined);
  return out;
}

}  // namespace panolabel
