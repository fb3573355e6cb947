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


#include "panolabel/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <tuple>
#include <numeric>
#include <sstream>

#include "panolabel/seam.hpp"

namespace panolabel {

namespace {

/// Fisher-Yates with a plain modulo draw so the order depends only on the
/// engine, not on the standard library's distributions.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(v[i - 1], v[j]);
  }
}

double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

const char* const kSeamLinkKey = "seam_link";
const char* const kDuplicateKey = "pad_duplicate";

}  // namespace

std::string_view bucket_name(SizeBucket b) {
  switch (b) {
    case SizeBucket::Small:
      return "small";
    case SizeBucket::Medium:
      return "medium";
    case SizeBucket::Large:
      return "large";
  }
  return "?";
}

SizeBucket size_bucket_for_area(double area) {
  if (area < 1024.0) return SizeBucket::Small;
  if (area <= 9216.0) return SizeBucket::Medium;
  return SizeBucket::Large;
}

SizeBucket size_bucket(const BBox& box) { return size_bucket_for_area(box.area()); }

DatasetStats dataset_stats(const std::vector<BoxSet>& sets, double top_band_px, double bottom_band_px) {
  DatasetStats stats;
  for (const auto& set : sets) {
    ++stats.images;
    std::set<ObjectClass> classes;
    const auto instances = seam_instances(set);
    for (const auto& inst : instances) {
      const ObjectClass cls = set.boxes[inst.members.front()].cls;
      classes.insert(cls);
      auto& pc = stats.per_class[cls];
      ++pc.instances;
      ++pc.buckets[static_cast<std::size_t>(size_bucket_for_area(inst.area()))];
      if (inst.y0 < top_band_px) ++pc.top_band;
      if (inst.y1 > set.height_px - bottom_band_px) ++pc.bottom_band;
    }
    ++stats.classes_per_image[classes.size()];
    ++stats.instances_per_image[instances.size()];
  }
  return stats;
}

nlohmann::json DatasetStats::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, pc] : per_class) {
    classes[std::string(class_key(cls))] = {{"instances", pc.instances},
                                             {"small", pc.buckets[0]},
                                             {"medium", pc.buckets[1]},
                                             {"large", pc.buckets[2]},
                                             {"top_band", pc.top_band},
                                             {"bottom_band", pc.bottom_band}};
  }
  auto hist = [](const std::map<std::size_t, std::size_t>& h) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : h) j[std::to_string(k)] = v;
    return j;
  };
  return {{"images", images},
          {"classes", std::move(classes)},
          {"classes_per_image", hist(classes_per_image)},
          {"instances_per_image", hist(instances_per_image)}};
}

std::string DatasetStats::to_csv() const {
  std::ostringstream out;
  out.precision(17);
  out << "class,instances,small_pct,medium_pct,large_pct,top_band_fraction,bottom_band_fraction\n";
  for (const auto& [cls, pc] : per_class) {
    const double n = static_cast<double>(pc.instances);
    out << class_key(cls) << ',' << pc.instances;
    for (std::size_t b : pc.buckets) out << ',' << 100.0 * static_cast<double>(b) / n;
    out << ',' << static_cast<double>(pc.top_band) / n << ',' << static_cast<double>(pc.bottom_band) / n << '\n';
  }
  return out.str();
}

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train:
      return "train";
    case Split::Val:
      return "val";
    case Split::Test:
      return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    if (split_name(s) == text) return s;
  }
  return std::nullopt;
}

nlohmann::json SplitAssignment::to_json() const {
  nlohmann::json images = nlohmann::json::object();
  for (const auto& [id, s] : split) {
    nlohmann::json entry = {{"split", split_name(s)}};
    if (auto it = neighbourhood.find(id); it != neighbourhood.end()) entry["neighbourhood"] = it->second;
    images[id] = std::move(entry);
  }
  return {{"images", std::move(images)}};
}

SplitAssignment SplitAssignment::from_json(const nlohmann::json& j) {
  SplitAssignment out;
  try {
    for (const auto& [id, entry] : j.at("images").items()) {
      const auto s = parse_split(entry.at("split").get<std::string>());
      if (!s) throw ParseError("unknown split for image " + id);
      out.split[id] = *s;
      if (entry.contains("neighbourhood")) out.neighbourhood[id] = entry.at("neighbourhood").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("split file: ") + e.what());
  }
  return out;
}

SplitAssignment group_split(const SplitRequest& req) {
  const double sum = req.targets[0] + req.targets[1] + req.targets[2];
  if (std::abs(sum - 1.0) > 1e-9 || std::any_of(req.targets.begin(), req.targets.end(), [](double t) { return t < 0; })) {
    throw Error("split fractions must be non-negative and sum to 1");
  }

  struct Hood {
    std::string id;
    std::vector<std::string> images;
    std::set<ObjectClass> classes;
    std::size_t rank = 0;  // position after the seeded shuffle
  };
  std::map<std::string, Hood> hoods;
  for (const auto& image : req.images) {
    const auto it = req.neighbourhoods.find(image);
    if (it == req.neighbourhoods.end()) throw Error("image " + image + " has no neighbourhood");
    Hood& h = hoods[it->second];
    h.id = it->second;
    h.images.push_back(image);
    if (auto p = req.presence.find(image); p != req.presence.end()) h.classes.insert(p->second.begin(), p->second.end());
  }

  std::vector<Hood*> order;
  for (auto& [_, h] : hoods) order.push_back(&h);
  std::mt19937_64 rng(req.seed);
  seeded_shuffle(order, rng);
  for (std::size_t i = 0; i < order.size(); ++i) order[i]->rank = i;

  std::map<std::string, Split> assigned;
  std::array<std::size_t, 3> filled{};
  auto assign = [&](Hood* h, Split s) {
    assigned[h->id] = s;
    filled[static_cast<std::size_t>(s)] += h->images.size();
  };

  // Required classes, rarest first.
  struct Need {
    std::size_t rarity;
    ObjectClass cls;
    Split split;
  };
  std::vector<Need> needs;
  for (std::size_t s = 0; s < 3; ++s) {
    for (ObjectClass c : req.required[s]) {
      const auto rarity = static_cast<std::size_t>(
          std::count_if(order.begin(), order.end(), [&](const Hood* h) { return h->classes.count(c) > 0; }));
      needs.push_back({rarity, c, static_cast<Split>(s)});
    }
  }
  std::sort(needs.begin(), needs.end(), [](const Need& a, const Need& b) {
    return std::tie(a.rarity, a.cls, a.split) < std::tie(b.rarity, b.cls, b.split);
  });
  std::vector<std::string> infeasible;
  for (const Need& n : needs) {
    const bool met = std::any_of(order.begin(), order.end(), [&](const Hood* h) {
      auto it = assigned.find(h->id);
      return it != assigned.end() && it->second == n.split && h->classes.count(n.cls);
    });
    if (met) continue;
    Hood* pick = nullptr;
    for (Hood* h : order) {
      if (assigned.count(h->id) || !h->classes.count(n.cls)) continue;
      if (!pick || h->images.size() < pick->images.size()) pick = h;
    }
    if (!pick) {
      infeasible.push_back(std::string(split_name(n.split)) + ":" + std::string(class_key(n.cls)));
      continue;
    }
    assign(pick, n.split);
  }
  if (!infeasible.empty()) {
    std::string msg = "unsatisfiable class requirements:";
    for (const auto& s : infeasible) msg += " " + s;
    throw Error(msg);
  }

  std::stable_sort(order.begin(), order.end(),
                   [](const Hood* a, const Hood* b) { return a->images.size() > b->images.size(); });
  const double total = static_cast<double>(req.images.size());
  for (Hood* h : order) {
    if (assigned.count(h->id)) continue;
    std::size_t best = 0;
    double best_deficit = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < 3; ++s) {
      const double deficit = req.targets[s] * total - static_cast<double>(filled[s]);
      if (deficit > best_deficit) {
        best_deficit = deficit;
        best = s;
      }
    }
    assign(h, static_cast<Split>(best));
  }

  SplitAssignment out;
  for (const auto& [id, h] : hoods) {
    for (const auto& image : h.images) {
      out.split[image] = assigned.at(id);
      out.neighbourhood[image] = id;
    }
  }
  return out;
}

double SamplingPlan::expected_epoch_size() const {
  double sum = 0.0;
  for (const auto& [_, r] : image_factor) sum += r;
  return sum;
}

nlohmann::json SamplingPlan::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [c, r] : class_factor) {
    classes[std::string(class_key(c))] = {{"fraction", class_fraction.at(c)}, {"repeat_factor", r}};
  }
  return {{"t", t},           {"seed", seed}, {"classes", std::move(classes)}, {"images", image_factor},
          {"epoch", epoch}, {"expected_epoch_size", expected_epoch_size()}};
}

SamplingPlan repeat_factors(const PresenceMap& presence, double t, std::uint64_t seed) {
  if (!(t > 0.0 && t <= 1.0)) throw Error("repeat threshold t must be in (0, 1]");
  SamplingPlan plan;
  plan.t = t;
  plan.seed = seed;
  std::map<ObjectClass, std::size_t> counts;
  for (const auto& [_, classes] : presence) {
    for (ObjectClass c : classes) ++counts[c];
  }
  const double n = static_cast<double>(presence.size());
  for (const auto& [c, k] : counts) {
    const double f = static_cast<double>(k) / n;
    plan.class_fraction[c] = f;
    plan.class_factor[c] = std::max(1.0, std::sqrt(t / f));
  }
  for (const auto& [id, classes] : presence) {
    double r = 1.0;
    for (ObjectClass c : classes) r = std::max(r, plan.class_factor.at(c));
    plan.image_factor[id] = r;
  }
  std::mt19937_64 rng(seed);
  plan.epoch = sample_epoch(plan, rng);
  return plan;
}

std::vector<std::string> sample_epoch(const SamplingPlan& plan, std::mt19937_64& rng) {
  std::vector<std::string> out;
  for (const auto& [id, r] : plan.image_factor) {
    const double whole = std::floor(r);
    auto copies = static_cast<std::size_t>(whole);
    if (unit_draw(rng) < r - whole) ++copies;
    out.insert(out.end(), copies, id);
  }
  return out;
}

BoxSet circular_pad(const BoxSet& set, const PadConfig& cfg) {
  const double w = set.width_px;
  const double pad = cfg.pad_px;
  if (!(pad >= 0.0 && pad < w)) throw GeometryError("pad must be in [0, width)");
  const double new_h = set.height_px - cfg.crop_top_px - cfg.crop_bottom_px;
  if (!(new_h > 0.0) || cfg.crop_top_px < 0.0 || cfg.crop_bottom_px < 0.0) {
    throw GeometryError("crops leave no rows");
  }
  const double new_w = w + 2.0 * pad;

  BoxSet out;
  out.panorama_id = set.panorama_id;
  out.width_px = static_cast<int>(new_w);
  out.height_px = static_cast<int>(new_h);
  out.stage = set.stage;

  auto crop_y = [&](BBox& b) {
    b.y_min = std::clamp(b.y_min - cfg.crop_top_px, 0.0, new_h);
    b.y_max = std::clamp(b.y_max - cfg.crop_top_px, 0.0, new_h);
    return b.height() >= 1.0;
  };

  for (const auto& inst : seam_instances(set)) {
    if (inst.linked()) {
      const BBox& right = set.boxes[inst.members[0]];
      const BBox& left = set.boxes[inst.members[1]];
      const double total = right.width() + left.width();
      BBox box = right;
      if (right.width() >= left.width()) {
        box.x_min = right.x_min + pad;
        box.x_max = box.x_min + total;
      } else {
        box.x_max = left.x_max + pad;
        box.x_min = box.x_max - total;
      }
      box.x_min = std::max(box.x_min, 0.0);
      box.x_max = std::min(box.x_max, new_w);
      box.metadata[kSeamLinkKey] = {
          {"link_id", *right.link_id}, {"right_x_min", right.x_min}, {"left_x_max", left.x_max}};
      box.link_id.reset();
      if (crop_y(box)) out.boxes.push_back(std::move(box));
      continue;
    }

    const BBox& src = set.boxes[inst.members.front()];
    BBox main = src;
    main.x_min += pad;
    main.x_max += pad;
    if (!crop_y(main)) continue;
    out.boxes.push_back(main);

    // Right edge mirrored into the left strip, left edge into the right one.
    const double r0 = std::max(src.x_min, w - pad), r1 = std::min(src.x_max, w);
    if (pad > 0.0 && r1 - r0 >= cfg.min_dup_width_px) {
      BBox dup = main;
      dup.x_min = r0 - (w - pad);
      dup.x_max = r1 - (w - pad);
      dup.metadata[kDuplicateKey] = true;
      out.boxes.push_back(std::move(dup));
    }
    const double l0 = std::max(src.x_min, 0.0), l1 = std::min(src.x_max, pad);
    if (pad > 0.0 && l1 - l0 >= cfg.min_dup_width_px) {
      BBox dup = main;
      dup.x_min = w + pad + l0;
      dup.x_max = w + pad + l1;
      dup.metadata[kDuplicateKey] = true;
      out.boxes.push_back(std::move(dup));
    }
  }
  return out;
}

BoxSet circular_unpad(const BoxSet& padded, int width_px, int height_px, const PadConfig& cfg) {
  const double w = width_px;
  BoxSet out;
  out.panorama_id = padded.panorama_id;
  out.width_px = width_px;
  out.height_px = height_px;
  out.stage = padded.stage;
  for (const auto& b : padded.boxes) {
    if (b.metadata.count(kDuplicateKey)) continue;
    BBox box = b;
    box.y_min += cfg.crop_top_px;
    box.y_max += cfg.crop_top_px;
    auto link = box.metadata.find(kSeamLinkKey);
    if (link == box.metadata.end()) {
      box.x_min -= cfg.pad_px;
      box.x_max -= cfg.pad_px;
      out.boxes.push_back(std::move(box));
      continue;
    }
    const nlohmann::json info = link->second;
    box.metadata.erase(link);
    box.link_id = info.at("link_id").get<std::string>();
    BBox right = box, left = box;
    right.x_min = info.at("right_x_min").get<double>();
    right.x_max = w;
    left.x_min = 0.0;
    left.x_max = info.at("left_x_max").get<double>();
    out.boxes.push_back(std::move(right));
    out.boxes.push_back(std::move(left));
  }
  return out;
}

std::vector<double> tile_offsets(const TileConfig& cfg) {
  std::vector<double> out;
  for (int i = 0; i < cfg.count; ++i) out.push_back(i * (cfg.tile_px - cfg.overlap_px));
  return out;
}

std::vector<Tile> classification_tiles(const BoxSet& padded, const TileConfig& cfg) {
  const double span = cfg.count * cfg.tile_px - (cfg.count - 1) * cfg.overlap_px;
  if (span != padded.width_px || padded.height_px - cfg.top_crop_px != cfg.tile_px) {
    std::ostringstream msg;
    msg << "tiling expects " << span << "x" << cfg.tile_px + cfg.top_crop_px << ", got " << padded.width_px << "x"
        << padded.height_px;
    throw GeometryError(msg.str());
  }
  std::vector<Tile> tiles;
  const auto offsets = tile_offsets(cfg);
  for (int i = 0; i < cfg.count; ++i) {
    Tile t;
    t.index = i;
    t.x_offset = offsets[i];
    t.y_offset = cfg.top_crop_px;
    t.size_px = cfg.tile_px;
    t.output_px = cfg.output_px;
    for (const auto& b : padded.boxes) {
      const double dx = std::min(b.x_max, t.x_offset + t.size_px) - std::max(b.x_min, t.x_offset);
      const double dy = std::min(b.y_max, t.y_offset + t.size_px) - std::max(b.y_min, t.y_offset);
      if (dx > 0.0 && dy > 0.0) t.positives.insert(b.cls);
    }
    tiles.push_back(std::move(t));
  }
  return tiles;
}

std::vector<std::string> curriculum_order(const std::map<std::string, std::size_t>& counts) {
  std::vector<std::pair<std::size_t, std::string>> v;
  for (const auto& [id, n] : counts) v.emplace_back(n, id);
  std::sort(v.begin(), v.end());
  std::vector<std::string> out;
  for (auto& [_, id] : v) out.push_back(std::move(id));
  return out;
}

std::vector<std::vector<std::string>> curriculum_shards(const std::map<std::string, std::size_t>& counts,
                                                        const std::map<std::string, std::string>& neighbourhoods,
                                                        std::size_t n_shards) {
  if (n_shards == 0) throw Error("need at least one shard");
  std::map<std::string, std::vector<std::string>> by_hood;
  for (const auto& [id, _] : counts) {
    const auto it = neighbourhoods.find(id);
    if (it == neighbourhoods.end()) throw Error("image " + id + " has no neighbourhood");
    by_hood[it->second].push_back(id);
  }
  std::vector<std::map<std::string, std::size_t>> parts(n_shards);
  std::size_t k = 0;
  for (const auto& [_, images] : by_hood) {
    for (const auto& id : images) parts[k++ % n_shards][id] = counts.at(id);
  }
  std::vector<std::vector<std::string>> out;
  for (const auto& p : parts) out.push_back(curriculum_order(p));
  return out;
}

}  // namespace panolabel
