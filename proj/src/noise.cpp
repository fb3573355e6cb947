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


#include "panolabel/noise.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "panolabel/hungarian.hpp"
#include "panolabel/seam.hpp"

namespace panolabel {

namespace {

void require_area(const BBox& b) {
  if (!(b.width() > 0.0 && b.height() > 0.0)) throw GeometryError("box without area");
}

double intersection(const BBox& a, const BBox& b) {
  const double dx = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double dy = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  return dx > 0.0 && dy > 0.0 ? dx * dy : 0.0;
}

double coord_distance(const BBox& a, const BBox& b) {
  const double d0 = a.x_min - b.x_min, d1 = a.y_min - b.y_min;
  const double d2 = a.x_max - b.x_max, d3 = a.y_max - b.y_max;
  return std::sqrt(d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3);
}

/// `a` shifted by a whole panorama width so its center lies nearest to b's.
BBox aligned(const BBox& a, const BBox& b, double period) {
  const double ca = 0.5 * (a.x_min + a.x_max);
  const double cb = 0.5 * (b.x_min + b.x_max);
  double best = 0.0;
  for (int k = -1; k <= 1; ++k) {
    if (std::abs(ca + k * period - cb) < std::abs(ca + best - cb)) best = k * period;
  }
  BBox out = a;
  out.x_min += best;
  out.x_max += best;
  return out;
}

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

nlohmann::json quantiles_json(const std::vector<double>& values) {
  const auto q = quantiles(values);
  if (!q) return nullptr;
  return {{"min", q->min}, {"q25", q->q25}, {"median", q->median}, {"q75", q->q75}, {"max", q->max}};
}

nlohmann::json optional_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); }

std::set<ObjectClass> present_classes(const BoxSet& set) {
  std::set<ObjectClass> out;
  for (const auto& b : set.boxes) out.insert(b.cls);
  return out;
}

void require_same_panorama(const BoxSet& noisy, const BoxSet& clean) {
  if (noisy.panorama_id != clean.panorama_id) {
    throw Error("panorama id mismatch: " + noisy.panorama_id + " vs " + clean.panorama_id);
  }
}

}  // namespace

double iou(const BBox& a, const BBox& b) {
  require_area(a);
  require_area(b);
  const double inter = intersection(a, b);
  return inter / (a.area() + b.area() - inter);
}

double giou(const BBox& a, const BBox& b) {
  require_area(a);
  require_area(b);
  const double inter = intersection(a, b);
  const double uni = a.area() + b.area() - inter;
  const double enclosing = (std::max(a.x_max, b.x_max) - std::min(a.x_min, b.x_min)) *
                           (std::max(a.y_max, b.y_max) - std::min(a.y_min, b.y_min));
  return inter / uni - std::max(0.0, (enclosing - uni) / enclosing);
}

std::vector<std::pair<std::size_t, std::size_t>> match_boxes(const std::vector<BBox>& noisy,
                                                             const std::vector<BBox>& clean, MatchCost cost) {
  CostMatrix m(noisy.size(), clean.size());
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    for (std::size_t j = 0; j < clean.size(); ++j) {
      switch (cost) {
        case MatchCost::IoU:
          m(i, j) = -iou(noisy[i], clean[j]);
          break;
        case MatchCost::GIoU:
          m(i, j) = -giou(noisy[i], clean[j]);
          break;
        case MatchCost::CoordL2:
          m(i, j) = coord_distance(noisy[i], clean[j]);
          break;
      }
    }
  }
  return solve_assignment(m);
}

std::vector<BBox> unrolled_boxes(const BoxSet& set) {
  const double w = set.width_px;
  std::vector<BBox> out;
  for (const auto& inst : seam_instances(set)) {
    BBox box = set.boxes[inst.members.front()];
    if (inst.linked()) {
      const BBox& right = set.boxes[inst.members[0]];
      const BBox& left = set.boxes[inst.members[1]];
      const double shift = right.width() >= left.width() ? 0.0 : -w;
      box.x_min = inst.x0 + shift;
      box.x_max = inst.x1 + shift;
      box.link_id.reset();
    }
    out.push_back(std::move(box));
  }
  return out;
}

std::optional<Quantiles> quantiles(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  return Quantiles{values.front(), quantile_sorted(values, 0.25), quantile_sorted(values, 0.5),
                   quantile_sorted(values, 0.75), values.back()};
}

std::optional<double> ClassOverlap::matched_noisy_fraction() const {
  if (noisy_total == 0) return std::nullopt;
  return static_cast<double>(matched) / static_cast<double>(noisy_total);
}

std::optional<double> ClassOverlap::matched_clean_fraction() const {
  if (clean_total == 0) return std::nullopt;
  return static_cast<double>(matched) / static_cast<double>(clean_total);
}

void MatchReport::merge(const MatchReport& other) {
  for (const auto& [cls, o] : other.per_class) {
    auto& mine = per_class[cls];
    mine.noisy_total += o.noisy_total;
    mine.clean_total += o.clean_total;
    mine.matched += o.matched;
    mine.ious.insert(mine.ious.end(), o.ious.begin(), o.ious.end());
    mine.gious.insert(mine.gious.end(), o.gious.begin(), o.gious.end());
  }
  shifts.insert(shifts.end(), other.shifts.begin(), other.shifts.end());
}

nlohmann::json MatchReport::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, o] : per_class) {
    auto pairs = nlohmann::json::array();
    for (std::size_t i = 0; i < o.ious.size(); ++i) pairs.push_back({o.ious[i], o.gious[i]});
    classes[std::string(class_key(cls))] = {
        {"noisy_total", o.noisy_total},
        {"clean_total", o.clean_total},
        {"matched", o.matched},
        {"matched_noisy_fraction", optional_json(o.matched_noisy_fraction())},
        {"matched_clean_fraction", optional_json(o.matched_clean_fraction())},
        {"iou_quantiles", quantiles_json(o.ious)},
        {"giou_quantiles", quantiles_json(o.gious)},
        {"pairs", std::move(pairs)},
    };
  }
  std::vector<double> c[4];
  for (const auto& s : shifts) {
    c[0].push_back(s.dx_min);
    c[1].push_back(s.dy_min);
    c[2].push_back(s.dx_max);
    c[3].push_back(s.dy_max);
  }
  const char* names[4] = {"dx_min", "dy_min", "dx_max", "dy_max"};
  nlohmann::json shift_json = nlohmann::json::object();
  for (int k = 0; k < 4; ++k) {
    shift_json[names[k]] = {{"samples", c[k]}, {"quantiles", quantiles_json(c[k])}};
  }
  return {{"classes", std::move(classes)}, {"shifts", std::move(shift_json)}};
}

std::optional<double> ClassLabels::precision() const {
  if (tp + fp == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

std::optional<double> ClassLabels::recall() const {
  if (tp + fn == 0) return std::nullopt;
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

void LabelReport::merge(const LabelReport& other) {
  for (const auto& [cls, o] : other.per_class) {
    auto& mine = per_class[cls];
    mine.tp += o.tp;
    mine.fp += o.fp;
    mine.fn += o.fn;
  }
  image_accuracy.insert(image_accuracy.end(), other.image_accuracy.begin(), other.image_accuracy.end());
}

nlohmann::json LabelReport::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, o] : per_class) {
    classes[std::string(class_key(cls))] = {{"tp", o.tp},
                                            {"fp", o.fp},
                                            {"fn", o.fn},
                                            {"precision", optional_json(o.precision())},
                                            {"recall", optional_json(o.recall())}};
  }
  nlohmann::json images = nlohmann::json::object();
  std::vector<double> acc;
  for (const auto& [id, a] : image_accuracy) {
    images[id] = a;
    acc.push_back(a);
  }
  return {{"classes", std::move(classes)}, {"image_accuracy", std::move(images)},
          {"accuracy_quantiles", quantiles_json(acc)}};
}

MatchReport overlap_report(const BoxSet& noisy, const BoxSet& clean) {
  require_same_panorama(noisy, clean);
  std::map<ObjectClass, std::pair<std::vector<BBox>, std::vector<BBox>>> by_class;
  for (auto& b : unrolled_boxes(noisy)) by_class[b.cls].first.push_back(std::move(b));
  for (auto& b : unrolled_boxes(clean)) by_class[b.cls].second.push_back(std::move(b));

  const double w = clean.width_px;
  MatchReport report;
  for (auto& [cls, lists] : by_class) {
    auto& [n, c] = lists;
    auto& stats = report.per_class[cls];
    stats.noisy_total = n.size();
    stats.clean_total = c.size();
    // Cylinder-aware scores: each noisy box is lifted onto the clean box's
    // side of the seam before scoring.
    CostMatrix m(n.size(), c.size());
    for (std::size_t i = 0; i < n.size(); ++i) {
      for (std::size_t j = 0; j < c.size(); ++j) m(i, j) = -giou(aligned(n[i], c[j], w), c[j]);
    }
    for (const auto& [i, j] : solve_assignment(m)) {
      const BBox a = aligned(n[i], c[j], w);
      stats.ious.push_back(iou(a, c[j]));
      stats.gious.push_back(giou(a, c[j]));
      ++stats.matched;
    }
  }
  return report;
}

std::vector<CoordShift> shift_report(const BoxSet& noisy, const BoxSet& clean) {
  require_same_panorama(noisy, clean);
  const auto n = unrolled_boxes(noisy);
  const auto c = unrolled_boxes(clean);
  const double w = clean.width_px;
  CostMatrix m(n.size(), c.size());
  for (std::size_t i = 0; i < n.size(); ++i) {
    for (std::size_t j = 0; j < c.size(); ++j) m(i, j) = coord_distance(aligned(n[i], c[j], w), c[j]);
  }
  std::vector<CoordShift> out;
  for (const auto& [i, j] : solve_assignment(m)) {
    const BBox a = aligned(n[i], c[j], w);
    out.push_back({a.x_min - c[j].x_min, a.y_min - c[j].y_min, a.x_max - c[j].x_max, a.y_max - c[j].y_max});
  }
  return out;
}

LabelReport label_report(const BoxSet& noisy, const BoxSet& clean) {
  require_same_panorama(noisy, clean);
  const auto pn = present_classes(noisy);
  const auto pc = present_classes(clean);
  LabelReport report;
  int agree = 0;
  for (ObjectClass cls : all_classes()) {
    const bool in_n = pn.count(cls) > 0;
    const bool in_c = pc.count(cls) > 0;
    if (in_n == in_c) ++agree;
    if (!in_n && !in_c) continue;
    auto& s = report.per_class[cls];
    if (in_n && in_c) ++s.tp;
    if (in_n && !in_c) ++s.fp;
    if (!in_n && in_c) ++s.fn;
  }
  report.image_accuracy.emplace_back(clean.panorama_id, static_cast<double>(agree) / kClassCount);
  return report;
}

std::vector<std::pair<const BoxSet*, const BoxSet*>> pair_by_panorama(const std::vector<BoxSet>& noisy,
                                                                     const std::vector<BoxSet>& clean) {
  std::map<std::string, const BoxSet*> n, c;
  for (const auto& s : noisy) {
    if (!n.emplace(s.panorama_id, &s).second) throw Error("duplicate panorama id " + s.panorama_id);
  }
  for (const auto& s : clean) {
    if (!c.emplace(s.panorama_id, &s).second) throw Error("duplicate panorama id " + s.panorama_id);
  }
  std::vector<std::string> missing;
  for (const auto& [id, _] : n) {
    if (!c.count(id)) missing.push_back(id + " (clean)");
  }
  for (const auto& [id, _] : c) {
    if (!n.count(id)) missing.push_back(id + " (noisy)");
  }
  if (!missing.empty()) {
    std::string msg = "panorama id mismatch, missing:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(msg);
  }
  std::vector<std::pair<const BoxSet*, const BoxSet*>> out;
  for (const auto& [id, s] : n) out.emplace_back(s, c.at(id));
  return out;
}

MatchReport overlap_report(const std::vector<BoxSet>& noisy, const std::vector<BoxSet>& clean) {
  MatchReport out;
  for (const auto& [n, c] : pair_by_panorama(noisy, clean)) out.merge(overlap_report(*n, *c));
  return out;
}

std::vector<CoordShift> shift_report(const std::vector<BoxSet>& noisy, const std::vector<BoxSet>& clean) {
  std::vector<CoordShift> out;
  for (const auto& [n, c] : pair_by_panorama(noisy, clean)) {
    const auto part = shift_report(*n, *c);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

LabelReport label_report(const std::vector<BoxSet>& noisy, const std::vector<BoxSet>& clean) {
  LabelReport out;
  for (const auto& [n, c] : pair_by_panorama(noisy, clean)) out.merge(label_report(*n, *c));
  return out;
}

std::string histogram_csv(const std::vector<double>& values, double lo, double hi, int bins) {
  if (bins <= 0 || !(hi > lo)) throw Error("histogram needs bins > 0 and hi > lo");
  std::vector<std::size_t> counts(bins, 0);
  const double step = (hi - lo) / bins;
  for (double v : values) {
    auto k = static_cast<long>(std::floor((v - lo) / step));
    k = std::clamp<long>(k, 0, bins - 1);
    ++counts[k];
  }
  std::ostringstream out;
  out.precision(17);
  out << "bin_lo,bin_hi,count\n";
  for (int k = 0; k < bins; ++k) out << lo + k * step << ',' << lo + (k + 1) * step << ',' << counts[k] << '\n';
  return out.str();
}

}  // namespace panolabel
