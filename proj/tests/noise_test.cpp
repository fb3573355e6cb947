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

#include <random>

#include "panolabel/hungarian.hpp"
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

BoxSet shifted(BoxSet s, double dx) {
  for (auto& b : s.boxes) {
    b.x_min += dx;
    b.x_max += dx;
  }
  return s;
}

}  // namespace

TEST(Assignment, Small) {
  CostMatrix m(3, 3);
  const double v[3][3] = {{4, 1, 3}, {2, 0, 5}, {3, 2, 2}};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m(i, j) = v[i][j];
  const auto a = solve_assignment(m);
  ASSERT_EQ(a.size(), 3u);
  double total = 0;
  for (auto [r, c] : a) total += v[r][c];
  EXPECT_EQ(total, 5.0);
  EXPECT_EQ(a[0].first, 0u);
  EXPECT_TRUE(solve_assignment(CostMatrix(0, 4)).empty());
  EXPECT_TRUE(solve_assignment(CostMatrix(2, 0)).empty());
  CostMatrix bad(1, 1, NAN);
  EXPECT_THROW(solve_assignment(bad), Error);
}

TEST(Assignment, RectangularMatchesBruteForce) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
    CostMatrix m(r, c);
    std::vector<double> score(r * c);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        m(i, j) = std::floor(scenes::uniform(rng, 0, 20));  // integer costs: ties are common
        score[i * c + j] = -m(i, j);
      }
    }
    const auto a = solve_assignment(m);
    ASSERT_EQ(a.size(), std::min(r, c));
    std::vector<bool> used_r(r), used_c(c);
    double total = 0;
    for (auto [i, j] : a) {
      EXPECT_FALSE(used_r[i]);
      EXPECT_FALSE(used_c[j]);
      used_r[i] = used_c[j] = true;
      total -= m(i, j);
    }
    EXPECT_EQ(total, scenes::brute_force_best(r, c, score));
  }
}

TEST(Scores, IouExamples) {
  EXPECT_DOUBLE_EQ(iou(box(0, 0, 10, 10), box(0, 0, 10, 10)), 1.0);
  EXPECT_DOUBLE_EQ(iou(box(0, 0, 10, 10), box(20, 0, 30, 10)), 0.0);
  EXPECT_DOUBLE_EQ(iou(box(0, 0, 10, 10), box(5, 0, 20, 10)), 0.25);
  EXPECT_DOUBLE_EQ(iou(box(0, 0, 2, 2), box(1, 0, 3, 2)), 1.0 / 3.0);
  EXPECT_THROW(iou(box(0, 0, 0, 2), box(1, 0, 3, 2)), GeometryError);
}

TEST(Scores, GiouExamples) {
  EXPECT_DOUBLE_EQ(giou(box(0, 0, 2, 2), box(0, 0, 2, 2)), 1.0);
  EXPECT_EQ(giou(box(0, 0, 2, 2), box(3, 0, 5, 2)), -0.2);
  EXPECT_THROW(giou(box(0, 0, 2, 2), box(3, 0, 5, 0)), GeometryError);
}

TEST(Scores, GiouBoundedByIou) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 10000; ++i) {
    const BBox a = scenes::random_box(rng), b = scenes::random_box(rng);
    const double g = giou(a, b), u = iou(a, b);
    EXPECT_LE(g, u);
    EXPECT_GT(g, -1.0);
    EXPECT_EQ(giou(a, a), 1.0);
    EXPECT_EQ(giou(a, b), giou(b, a));
  }
}

TEST(Matching, GiouMatchesBruteForce) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<BBox> n, c;
    const std::size_t nn = rng() % 7, nc = rng() % 7;
    for (std::size_t i = 0; i < nn; ++i) n.push_back(scenes::random_box(rng));
    for (std::size_t j = 0; j < nc; ++j) c.push_back(scenes::random_box(rng));
    const auto pairs = match_boxes(n, c, MatchCost::GIoU);
    ASSERT_EQ(pairs.size(), std::min(nn, nc));
    if (pairs.empty()) continue;
    std::vector<double> score(nn * nc);
    for (std::size_t i = 0; i < nn; ++i)
      for (std::size_t j = 0; j < nc; ++j) score[i * nc + j] = giou(n[i], c[j]);
    double total = 0;
    for (auto [i, j] : pairs) total += giou(n[i], c[j]);
    EXPECT_EQ(total, scenes::brute_force_best(nn, nc, score));
  }
}

TEST(Matching, Trivial) {
  EXPECT_EQ(match_boxes({box(0, 0, 1, 1)}, {box(5, 5, 6, 6)}, MatchCost::IoU).size(), 1u);
  EXPECT_TRUE(match_boxes({box(0, 0, 1, 1), box(2, 2, 3, 3)}, {}, MatchCost::GIoU).empty());
  const auto p = match_boxes({box(100, 0, 110, 10), box(0, 0, 10, 10)}, {box(1, 0, 11, 10), box(101, 0, 111, 10)},
                             MatchCost::CoordL2);
  EXPECT_EQ(p, (std::vector<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 0}}));
}

TEST(Unroll, LinkedPairs) {
  auto r = box(1380, 10, 1400, 50);
  auto l = box(0, 10, 30, 50);
  r.link_id = l.link_id = "L";
  const auto out = unrolled_boxes(set_of({r, l}));
  ASSERT_EQ(out.size(), 1u);
  EXPECT_DOUBLE_EQ(out[0].x_min, -20);
  EXPECT_DOUBLE_EQ(out[0].x_max, 30);
  l.x_max = 10;
  const auto wide_right = unrolled_boxes(set_of({r, l}));
  EXPECT_DOUBLE_EQ(wide_right[0].x_min, 1380);
  EXPECT_DOUBLE_EQ(wide_right[0].x_max, 1410);
}

TEST(Overlap, SelfMatch) {
  const auto s = set_of({box(0, 0, 10, 10), box(50, 50, 70, 90, ObjectClass::Tree), box(100, 0, 120, 30)});
  const auto rep = overlap_report(s, s);
  for (const auto& [cls, o] : rep.per_class) {
    EXPECT_EQ(*o.matched_noisy_fraction(), 1.0);
    EXPECT_EQ(*o.matched_clean_fraction(), 1.0);
    for (double v : o.ious) EXPECT_EQ(v, 1.0);
  }
  EXPECT_EQ(rep.per_class.at(ObjectClass::Building).matched, 2u);
}

TEST(Overlap, UniformShift) {
  const auto clean = set_of({box(0, 0, 10, 10), box(40, 0, 60, 20), box(200, 100, 300, 150)});
  const auto noisy = shifted(clean, 5.0);
  const auto rep = overlap_report(noisy, clean);
  const auto& o = rep.per_class.at(ObjectClass::Building);
  ASSERT_EQ(o.matched, 3u);
  std::vector<double> want{5.0 / 15.0, 15.0 / 25.0, 95.0 / 105.0};
  std::vector<double> got = o.ious;
  std::sort(want.begin(), want.end());
  std::sort(got.begin(), got.end());
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(got[k], want[k], 1e-12);
}

TEST(Overlap, NoisyOnlyClass) {
  const auto rep = overlap_report(set_of({box(0, 0, 10, 10, ObjectClass::Bus)}), set_of({box(0, 0, 10, 10)}));
  const auto& bus = rep.per_class.at(ObjectClass::Bus);
  EXPECT_EQ(bus.matched_noisy_fraction(), 0.0);
  EXPECT_FALSE(bus.matched_clean_fraction());
}

TEST(Overlap, AcrossSeam) {
  // The noisy annotator drew one box ending at the edge; the clean set has a
  // linked pair.
  auto r = box(1390, 0, 1400, 10);
  auto l = box(0, 0, 10, 10);
  r.link_id = l.link_id = "L";
  const auto rep = overlap_report(set_of({box(1392, 0, 1400, 10)}), set_of({r, l}));
  const auto& o = rep.per_class.at(ObjectClass::Building);
  ASSERT_EQ(o.ious.size(), 1u);
  EXPECT_NEAR(o.ious[0], 8.0 / 20.0, 1e-12);
}

TEST(Overlap, MergeIsAssociative) {
  const auto a = overlap_report(set_of({box(0, 0, 10, 10)}, "a"), set_of({box(1, 0, 11, 10)}, "a"));
  const auto b = overlap_report(set_of({box(0, 0, 10, 10)}, "b"), set_of({box(2, 0, 12, 10)}, "b"));
  const auto c = overlap_report(set_of({box(0, 0, 10, 10, ObjectClass::Tree)}, "c"),
                                set_of({box(3, 0, 13, 10, ObjectClass::Tree)}, "c"));
  MatchReport left = a;
  left.merge(b);
  left.merge(c);
  MatchReport bc = b;
  bc.merge(c);
  MatchReport right = a;
  right.merge(bc);
  EXPECT_EQ(left.to_json(), right.to_json());
}

TEST(Shifts, Translation) {
  const auto clean = set_of({box(0, 0, 10, 10), box(40, 0, 60, 20, ObjectClass::Tree)});
  for (const auto& s : shift_report(clean, clean)) {
    EXPECT_EQ(s.dx_min, 0);
    EXPECT_EQ(s.dy_max, 0);
  }
  const auto shifts = shift_report(shifted(clean, 3.0), clean);
  ASSERT_EQ(shifts.size(), 2u);
  for (const auto& s : shifts) {
    EXPECT_EQ(s.dx_min, 3.0);
    EXPECT_EQ(s.dx_max, 3.0);
    EXPECT_EQ(s.dy_min, 0.0);
    EXPECT_EQ(s.dy_max, 0.0);
  }
}

TEST(Shifts, HandCase) {
  // Class-agnostic: the tree pairs with the nearer building by coordinates.
  const auto noisy = set_of({box(12, 0, 22, 10, ObjectClass::Tree), box(0, 1, 10, 11)});
  const auto clean = set_of({box(0, 0, 10, 10), box(10, 0, 20, 10)});
  const auto s = shift_report(noisy, clean);
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].dx_min, 2);
  EXPECT_EQ(s[0].dx_max, 2);
  EXPECT_EQ(s[1].dy_min, 1);
  EXPECT_EQ(s[1].dx_min, 0);
}

TEST(Labels, Identical) {
  const auto s = set_of({box(0, 0, 10, 10), box(0, 0, 10, 10, ObjectClass::Tree)});
  const auto rep = label_report(s, s);
  for (const auto& [cls, l] : rep.per_class) {
    EXPECT_EQ(l.precision(), 1.0);
    EXPECT_EQ(l.recall(), 1.0);
  }
  EXPECT_EQ(rep.image_accuracy[0].second, 1.0);
}

TEST(Labels, ExtraClass) {
  const auto clean = set_of({box(0, 0, 10, 10)});
  const auto noisy = set_of({box(0, 0, 10, 10), box(0, 0, 10, 10, ObjectClass::Bus)});
  const auto rep = label_report(noisy, clean);
  EXPECT_EQ(rep.per_class.at(ObjectClass::Bus).precision(), 0.0);
  EXPECT_EQ(rep.image_accuracy[0].second, 21.0 / 22.0);
}

TEST(Labels, ThreeImages) {
  using C = ObjectClass;
  const std::vector<BoxSet> clean{set_of({box(0, 0, 1, 1, C::Tree), box(0, 0, 1, 1, C::Bus)}, "a"),
                                  set_of({box(0, 0, 1, 1, C::Tree)}, "b"), set_of({}, "c")};
  const std::vector<BoxSet> noisy{set_of({box(0, 0, 1, 1, C::Tree)}, "a"),
                                  set_of({box(0, 0, 1, 1, C::Tree), box(0, 0, 1, 1, C::Bus)}, "b"),
                                  set_of({box(0, 0, 1, 1, C::Tree)}, "c")};
  const auto rep = label_report(noisy, clean);
  const auto& tree = rep.per_class.at(C::Tree);
  EXPECT_EQ(tree.tp, 2u);
  EXPECT_EQ(tree.fp, 1u);
  EXPECT_EQ(tree.fn, 0u);
  EXPECT_EQ(tree.precision(), 2.0 / 3.0);
  EXPECT_EQ(tree.recall(), 1.0);
  const auto& bus = rep.per_class.at(C::Bus);
  EXPECT_EQ(bus.precision(), 0.0);
  EXPECT_EQ(bus.recall(), 0.0);
  ASSERT_EQ(rep.image_accuracy.size(), 3u);
  EXPECT_EQ(rep.image_accuracy[0].second, 21.0 / 22.0);
  EXPECT_EQ(rep.image_accuracy[1].second, 21.0 / 22.0);
  EXPECT_EQ(rep.image_accuracy[2].second, 21.0 / 22.0);
  EXPECT_THROW(label_report(noisy, std::vector<BoxSet>{clean[0]}), Error);
}

TEST(Summaries, Quantiles) {
  EXPECT_FALSE(quantiles({}));
  const auto q = *quantiles({4, 1, 3, 2, 5});
  EXPECT_EQ(q.min, 1);
  EXPECT_EQ(q.q25, 2);
  EXPECT_EQ(q.median, 3);
  EXPECT_EQ(q.max, 5);
  EXPECT_EQ(quantiles({1, 2})->median, 1.5);
}

TEST(Summaries, Histogram) {
  const auto csv = histogram_csv({0.0, 0.1, 0.5, 0.99, 1.0, 2.0, -1.0}, 0.0, 1.0, 2);
  EXPECT_EQ(csv, "bin_lo,bin_hi,count\n0,0.5,3\n0.5,1,4\n");
  EXPECT_THROW(histogram_csv({}, 1.0, 1.0, 3), Error);
}
