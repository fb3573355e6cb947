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

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "panolabel/metrics.hpp"
#include "panolabel/noise.hpp"
#include "scenes.hpp"

using namespace panolabel;
using scenes::make_box;

namespace {

BBox box(double x0, double y0, double x1, double y1, ObjectClass cls = ObjectClass::Building) {
  return make_box(cls, x0, y0, x1, y1, 10, "");
}

BoxSet set_of(std::vector<BBox> boxes, const std::string& id = "p") {
  BoxSet s;
  s.panorama_id = id;
  s.boxes = std::move(boxes);
  return s;
}

Detection det(const std::string& image, const BBox& b, double score) {
  return {image, b.cls, b, score};
}

}  // namespace

TEST(FScore, Perfect) {
  const PresenceMap p{{"a", {ObjectClass::Tree, ObjectClass::Bus}}, {"b", {ObjectClass::Tree}}};
  const auto r = weighted_fscore(p, p);
  EXPECT_EQ(r.weighted_f, 1.0);
  for (const auto& [_, c] : r.per_class) EXPECT_EQ(c.f, 1.0);
}

TEST(FScore, HalfAndHalf) {
  using C = ObjectClass;
  const PresenceMap truth{{"a", {C::Tree}}, {"b", {C::Tree}}, {"c", {}}, {"d", {}}};
  const PresenceMap pred{{"a", {C::Tree}}, {"b", {}}, {"c", {C::Tree}}, {"d", {}}};
  const auto r = weighted_fscore(pred, truth);
  EXPECT_EQ(r.per_class.at(C::Tree).precision, 0.5);
  EXPECT_EQ(r.per_class.at(C::Tree).recall, 0.5);
  EXPECT_EQ(r.per_class.at(C::Tree).f, 0.5);
}

TEST(FScore, SupportWeights) {
  using C = ObjectClass;
  const PresenceMap truth{{"a", {C::Tree}}, {"b", {C::Tree}}, {"c", {C::Tree, C::Bus}}, {"d", {}}};
  const PresenceMap pred{{"a", {C::Tree}}, {"b", {C::Tree}}, {"c", {}}, {"d", {C::Bus, C::Ferry}}};
  const auto r = weighted_fscore(pred, truth);
  const double f_tree = 2 * 1.0 * (2.0 / 3.0) / (1.0 + 2.0 / 3.0);
  EXPECT_EQ(r.per_class.at(C::Tree).support, 3u);
  EXPECT_EQ(r.per_class.at(C::Bus).support, 1u);
  EXPECT_EQ(r.per_class.at(C::Bus).f, 0.0);
  EXPECT_FALSE(r.per_class.count(C::Ferry));
  EXPECT_NEAR(r.weighted_f, (3 * f_tree + 1 * 0.0) / 4, 1e-15);
  EXPECT_THROW(weighted_fscore({}, {}), Error);
  EXPECT_THROW(weighted_fscore({{"a", {}}}, truth), Error);
}

TEST(Coco, SinglePerfect) {
  const auto truth = std::vector<BoxSet>{set_of({box(0, 0, 10, 10)})};
  const auto r = coco_map({det("p", box(0, 0, 10, 10), 0.9)}, truth);
  ASSERT_EQ(r.ap.size(), 1u);
  for (double v : r.ap.at(ObjectClass::Building)) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.map50, 1.0);
}

TEST(Coco, ThresholdSemantics) {
  const auto truth = std::vector<BoxSet>{set_of({box(0, 0, 10, 10)})};
  const auto r = coco_map({det("p", box(0, 0, 10, 6), 0.9)}, truth, {0.5, 0.6, 0.75});
  EXPECT_EQ(r.ap.at(ObjectClass::Building), (std::vector<double>{1.0, 1.0, 0.0}));
}

TEST(Coco, HandTrace) {
  // Scores 0.9 (hit), 0.8 (miss), 0.7 (hit) against two truths: precision
  // 1, 1/2, 2/3 at recall 1/2, 1/2, 1.
  const auto truth = std::vector<BoxSet>{set_of({box(0, 0, 10, 10), box(100, 0, 110, 10)})};
  const std::vector<Detection> dets{det("p", box(0, 0, 10, 10), 0.9), det("p", box(50, 0, 60, 10), 0.8),
                                    det("p", box(100, 0, 110, 10), 0.7)};
  const auto r = coco_map(dets, truth, {0.5});
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) sum += k <= 50 ? 1.0 : 2.0 / 3.0;
  EXPECT_EQ(r.ap.at(ObjectClass::Building)[0], sum / 101.0);
  EXPECT_NEAR(r.ap.at(ObjectClass::Building)[0], (51 + 50 * (2.0 / 3.0)) / 101.0, 1e-15);
}

TEST(Coco, ClassesWithoutTruthIgnored) {
  const auto truth = std::vector<BoxSet>{set_of({box(0, 0, 10, 10)})};
  const auto r = coco_map({det("p", box(0, 0, 10, 10), 0.9), det("p", box(0, 0, 10, 10, ObjectClass::Tree), 0.95),
                           det("elsewhere", box(0, 0, 10, 10), 0.99)},
                          truth);
  EXPECT_EQ(r.ap.size(), 1u);
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(coco_map({}, truth).map, 0.0);
  EXPECT_EQ(coco_map({}, {}).map, 0.0);
}

TEST(Coco, MatchesBruteForce) {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<BoxSet> truth;
    std::vector<Detection> dets;
    const int images = 1 + static_cast<int>(rng() % 3);
    for (int i = 0; i < images; ++i) {
      const std::string id = "i" + std::to_string(i);
      std::vector<BBox> gts;
      const int ng = static_cast<int>(rng() % 4);
      for (int g = 0; g < ng; ++g) gts.push_back(scenes::random_box(rng, 40));
      for (int d = 0; d < static_cast<int>(rng() % 5); ++d) {
        BBox b = gts.empty() || rng() % 3 == 0 ? scenes::random_box(rng, 40) : gts[rng() % gts.size()];
        b.x_min += scenes::uniform(rng, -3, 3);
        b.x_max += scenes::uniform(rng, -3, 3);
        if (b.x_max <= b.x_min) b.x_max = b.x_min + 1;
        dets.push_back(det(id, b, scenes::uniform(rng, 0, 1)));
      }
      truth.push_back(set_of(gts, id));
    }
    const auto thresholds = coco_iou_thresholds();
    const auto r = coco_map(dets, truth, thresholds);
    std::size_t npos = 0;
    for (const auto& s : truth) npos += s.boxes.size();
    if (npos == 0) {
      EXPECT_TRUE(r.ap.empty());
      continue;
    }
    const auto& ap = r.ap.at(ObjectClass::Building);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      EXPECT_EQ(ap[t], scenes::reference_ap(dets, truth, thresholds[t])) << trial << " t=" << thresholds[t];
      if (t > 0) EXPECT_LE(ap[t], ap[t - 1]);
    }
  }
}

TEST(Recall, TopK) {
  const auto truth = std::vector<BoxSet>{set_of({box(0, 0, 10, 10), box(20, 0, 30, 10)})};
  EXPECT_EQ(recall_at_k({det("p", box(0, 0, 10, 10), 0.5), det("p", box(20, 0, 30, 10), 0.4)}, truth), 1.0);
  EXPECT_EQ(recall_at_k({}, truth), 0.0);

  const auto one = std::vector<BoxSet>{set_of({box(0, 0, 10, 10)})};
  std::vector<Detection> dets;
  for (int i = 0; i < 100; ++i) dets.push_back(det("p", box(500, 500, 510, 510, ObjectClass::Tree), 0.9));
  for (int i = 0; i < 20; ++i) dets.push_back(det("p", box(0, 0, 10, 10), 0.1));
  EXPECT_EQ(recall_at_k(dets, one), 0.0);
  EXPECT_EQ(recall_at_k(dets, one, 101), 1.0);
}

TEST(Gold, Examples) {
  const auto gold = set_of({box(0, 0, 10, 10), box(100, 0, 110, 10), box(200, 0, 210, 10)});
  const auto same = gold_score(gold, gold);
  EXPECT_EQ(same.median_iou, 1.0);
  EXPECT_TRUE(same.pass);

  const auto nothing = gold_score(set_of({}), gold);
  EXPECT_EQ(nothing.median_iou, 0.0);
  EXPECT_FALSE(nothing.pass);

  const auto partial = gold_score(set_of({box(0, 0, 10, 8), box(100, 0, 110, 6)}), gold);
  auto samples = partial.samples;
  std::sort(samples.begin(), samples.end());
  ASSERT_EQ(samples.size(), 3u);
  EXPECT_EQ(samples[0], 0.0);
  EXPECT_NEAR(samples[1], 0.6, 1e-12);
  EXPECT_NEAR(samples[2], 0.8, 1e-12);
  EXPECT_NEAR(partial.median_iou, 0.6, 1e-12);
  EXPECT_TRUE(partial.pass);
  EXPECT_FALSE(gold_score(set_of({box(0, 0, 10, 8), box(100, 0, 110, 6)}), gold, 0.7).pass);

  EXPECT_THROW(gold_score(gold, set_of({})), Error);
  EXPECT_THROW(gold_score(set_of({}, "other"), gold), Error);
}

TEST(Gold, WrongClassScoresZero) {
  const auto gold = set_of({box(0, 0, 10, 10)});
  EXPECT_EQ(gold_score(set_of({box(0, 0, 10, 10, ObjectClass::Tree)}), gold).median_iou, 0.0);
}

TEST(Median, EvenAndOdd) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 3, 2}), 2.5);
  EXPECT_THROW(median({}), Error);
}
