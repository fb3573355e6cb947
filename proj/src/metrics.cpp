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


#include "panolabel/metrics.hpp"

#include <algorithm>
#include <array>
#include <numeric>

#include "panolabel/noise.hpp"

namespace panolabel {

namespace {

struct Scored {
  double score;
  bool tp;
};

/// Greedy COCO matching of one image and class at one threshold. `dets` is
/// sorted by descending score.
void match_image(const std::vector<const Detection*>& dets, const std::vector<const BBox*>& gts, double threshold,
                 std::vector<Scored>& out) {
  std::vector<char> taken(gts.size(), 0);
  for (const Detection* d : dets) {
    double best = std::min(threshold, 1.0 - 1e-10);
    long m = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou(d->box, *gts[g]);
      if (v < best) continue;
      best = v;
      m = static_cast<long>(g);
    }
    if (m >= 0) taken[m] = 1;
    out.push_back({d->score, m >= 0});
  }
}

struct ClassCurve {
  std::vector<Scored> scored;
  std::size_t npos = 0;
};

/// Per class and threshold: detections scored TP/FP across images.
std::map<ObjectClass, std::vector<ClassCurve>> evaluate(const std::vector<Detection>& dets,
                                                        const std::vector<BoxSet>& truth,
                                                        const std::vector<double>& thresholds, std::size_t max_dets) {
  using Key = std::pair<std::string, ObjectClass>;
  std::map<Key, std::vector<const BBox*>> gts;
  std::map<Key, std::vector<const Detection*>> by_key;
  std::set<std::string> images;
  for (const auto& set : truth) {
    images.insert(set.panorama_id);
    for (const auto& b : set.boxes) gts[{set.panorama_id, b.cls}].push_back(&b);
  }
  for (const auto& d : dets) {
    if (!(d.score >= 0.0 && d.score <= 1.0)) throw Error("detection score outside [0, 1]");
    by_key[{d.image_id, d.cls}].push_back(&d);
  }

  std::map<ObjectClass, std::vector<ClassCurve>> curves;
  for (const auto& [key, g] : gts) {
    auto& c = curves[key.second];
    if (c.empty()) c.resize(thresholds.size());
    for (auto& t : c) t.npos += g.size();
  }
  std::set<Key> keys;
  for (const auto& [k, _] : gts) keys.insert(k);
  for (const auto& [k, _] : by_key) {
    if (images.count(k.first)) keys.insert(k);
  }
  static const std::vector<const BBox*> kNone;
  for (const auto& key : keys) {
    auto cit = curves.find(key.second);
    if (cit == curves.end()) continue;  // no truth anywhere for this class
    auto dit = by_key.find(key);
    std::vector<const Detection*> ds = dit == by_key.end() ? std::vector<const Detection*>{} : dit->second;
    std::stable_sort(ds.begin(), ds.end(), [](const Detection* a, const Detection* b) { return a->score > b->score; });
    if (ds.size() > max_dets) ds.resize(max_dets);
    auto git = gts.find(key);
    const auto& g = git == gts.end() ? kNone : git->second;
    for (std::size_t t = 0; t < thresholds.size(); ++t) match_image(ds, g, thresholds[t], cit->second[t].scored);
  }
  for (auto& [_, per_t] : curves) {
    for (auto& c : per_t) {
      std::stable_sort(c.scored.begin(), c.scored.end(),
                       [](const Scored& a, const Scored& b) { return a.score > b.score; });
    }
  }
  return curves;
}

double interpolated_ap(const ClassCurve& c) {
  const std::size_t n = c.scored.size();
  std::vector<double> rc(n), pr(n);
  double tp = 0.0, fp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    (c.scored[i].tp ? tp : fp) += 1.0;
    rc[i] = tp / static_cast<double>(c.npos);
    pr[i] = tp / (tp + fp);
  }
  for (std::size_t i = n; i-- > 1;) pr[i - 1] = std::max(pr[i - 1], pr[i]);
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double thr = r / 100.0;
    const auto it = std::lower_bound(rc.begin(), rc.end(), thr);
    if (it != rc.end()) sum += pr[static_cast<std::size_t>(it - rc.begin())];
  }
  return sum / 101.0;
}

double final_recall(const ClassCurve& c) {
  const auto tp = std::count_if(c.scored.begin(), c.scored.end(), [](const Scored& s) { return s.tp; });
  return static_cast<double>(tp) / static_cast<double>(c.npos);
}

}  // namespace

PresenceMap presence_from_boxsets(const std::vector<BoxSet>& sets) {
  PresenceMap out;
  for (const auto& s : sets) {
    auto& classes = out[s.panorama_id];
    for (const auto& b : s.boxes) classes.insert(b.cls);
  }
  return out;
}

nlohmann::json FScoreReport::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [cls, p] : per_class) {
    classes[std::string(class_key(cls))] = {
        {"precision", p.precision}, {"recall", p.recall}, {"f", p.f}, {"support", p.support}};
  }
  return {{"classes", std::move(classes)}, {"weighted_f", weighted_f}};
}

FScoreReport weighted_fscore(const PresenceMap& predicted, const PresenceMap& truth) {
  if (truth.empty()) throw Error("F-score over no images");
  if (predicted.size() != truth.size() ||
      !std::equal(predicted.begin(), predicted.end(), truth.begin(),
                  [](const auto& a, const auto& b) { return a.first == b.first; })) {
    throw Error("predicted and true labels cover different images");
  }
  std::map<ObjectClass, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (const auto& [id, t] : truth) {
    const auto& p = predicted.at(id);
    for (ObjectClass c : all_classes()) {
      const bool in_p = p.count(c) > 0, in_t = t.count(c) > 0;
      if (in_p && in_t) ++counts[c][0];
      if (in_p && !in_t) ++counts[c][1];
      if (!in_p && in_t) ++counts[c][2];
    }
  }
  FScoreReport report;
  double weighted = 0.0;
  std::size_t total = 0;
  for (const auto& [c, n] : counts) {
    const std::size_t support = n[0] + n[2];
    if (support == 0) continue;
    FScoreReport::PerClass pc;
    pc.support = support;
    pc.precision = n[0] + n[1] == 0 ? 0.0 : static_cast<double>(n[0]) / static_cast<double>(n[0] + n[1]);
    pc.recall = static_cast<double>(n[0]) / static_cast<double>(support);
    pc.f = pc.precision + pc.recall == 0.0 ? 0.0 : 2.0 * pc.precision * pc.recall / (pc.precision + pc.recall);
    weighted += static_cast<double>(support) * pc.f;
    total += support;
    report.per_class[c] = pc;
  }
  report.weighted_f = total == 0 ? 0.0 : weighted / static_cast<double>(total);
  return report;
}

std::vector<double> coco_iou_thresholds() {
  std::vector<double> out;
  for (int i = 0; i < 10; ++i) out.push_back((50 + 5 * i) / 100.0);
  return out;
}

double CocoResult::class_ap(ObjectClass c) const {
  const auto& v = ap.at(c);
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

nlohmann::json CocoResult::to_json() const {
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [c, v] : ap) classes[std::string(class_key(c))] = {{"ap", class_ap(c)}, {"ap_per_threshold", v}};
  return {{"map", map}, {"map50", map50}, {"thresholds", thresholds}, {"classes", std::move(classes)}};
}

CocoResult coco_map(const std::vector<Detection>& dets, const std::vector<BoxSet>& truth,
                    const std::vector<double>& thresholds, std::size_t max_dets) {
  CocoResult result;
  result.thresholds = thresholds;
  const auto curves = evaluate(dets, truth, thresholds, max_dets);
  double sum = 0.0, sum50 = 0.0;
  std::size_t n50 = 0;
  for (const auto& [c, per_t] : curves) {
    auto& v = result.ap[c];
    for (std::size_t t = 0; t < per_t.size(); ++t) {
      v.push_back(interpolated_ap(per_t[t]));
      sum += v.back();
      if (std::abs(thresholds[t] - 0.5) < 1e-12) {
        sum50 += v.back();
        ++n50;
      }
    }
  }
  if (!curves.empty() && !thresholds.empty()) {
    result.map = sum / static_cast<double>(curves.size() * thresholds.size());
  }
  if (n50 > 0) result.map50 = sum50 / static_cast<double>(n50);
  return result;
}

double recall_at_k(const std::vector<Detection>& dets, const std::vector<BoxSet>& truth, std::size_t k,
                   const std::vector<double>& thresholds) {
  std::map<std::string, std::vector<const Detection*>> per_image;
  for (const auto& d : dets) per_image[d.image_id].push_back(&d);
  std::vector<Detection> kept;
  for (auto& [_, ds] : per_image) {
    std::stable_sort(ds.begin(), ds.end(), [](const Detection* a, const Detection* b) { return a->score > b->score; });
    for (std::size_t i = 0; i < ds.size() && i < k; ++i) kept.push_back(*ds[i]);
  }
  const auto curves = evaluate(kept, truth, thresholds, kept.size());
  if (curves.empty() || thresholds.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [_, per_t] : curves) {
    for (const auto& c : per_t) sum += final_recall(c);
  }
  return sum / static_cast<double>(curves.size() * thresholds.size());
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of nothing");
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double hi = values[mid];
  if (values.size() % 2 == 1) return hi;
  const double lo = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lo + hi);
}

GoldScore gold_score(const BoxSet& worker, const BoxSet& gold, double threshold) {
  if (gold.boxes.empty()) throw Error("gold set " + gold.panorama_id + " has no boxes");
  const MatchReport report = overlap_report(worker, gold);
  GoldScore out;
  std::size_t unmatched = 0;
  for (const auto& [_, stats] : report.per_class) {
    out.samples.insert(out.samples.end(), stats.ious.begin(), stats.ious.end());
    unmatched += stats.clean_total - stats.matched;
  }
  out.samples.insert(out.samples.end(), unmatched, 0.0);
  out.median_iou = median(out.samples);
  out.pass = out.median_iou >= threshold;
  return out;
}

}  // namespace panolabel
