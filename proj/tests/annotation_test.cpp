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

#include "driver.hpp"
#include "panolabel/annotation.hpp"
#include "panolabel/coco.hpp"
#include "scenes.hpp"

using namespace panolabel;
using scenes::make_box;

namespace {

EditEvent ev(std::uint64_t seq, EventKind kind, const std::string& image, const std::string& box = "",
             nlohmann::json payload = nlohmann::json::object()) {
  EditEvent e;
  e.seq = seq;
  e.kind = kind;
  e.image_id = image;
  e.box_id = box;
  e.payload = std::move(payload);
  e.timestamp_ms = static_cast<std::int64_t>(seq) * 1000;
  return e;
}

SessionHeader header_with(std::vector<BoxSet> images, std::vector<ObjectClass> order = {ObjectClass::Building}) {
  SessionHeader h;
  h.session_id = "s1";
  h.worker_id = "w";
  h.batch_id = "batch1";
  h.images = std::move(images);
  h.gold_image = h.images.front().panorama_id;
  h.class_order = std::move(order);
  return h;
}

BoxSet three_buildings(const std::string& id = "p") {
  BoxSet s;
  s.panorama_id = id;
  s.boxes = {make_box(ObjectClass::Building, 300, 100, 340, 200, 10, "a"),
             make_box(ObjectClass::Building, 20, 100, 60, 200, 10, "b"),
             make_box(ObjectClass::Building, 900, 100, 960, 200, 10, "c")};
  return s;
}

BoxSet random_image(std::mt19937_64& rng, const std::string& id) {
  BoxSet s;
  s.panorama_id = id;
  const auto& classes = all_classes();
  const int n = static_cast<int>(rng() % 6);
  for (int i = 0; i < n; ++i) s.boxes.push_back(scenes::random_box(rng, 650, classes[rng() % classes.size()]));
  if (rng() % 2) {
    BBox l = make_box(ObjectClass::Tram, 0, 300, 30, 400, 12, "t");
    BBox r = make_box(ObjectClass::Tram, 1380, 300, 1400, 400, 12, "t");
    l.link_id = r.link_id = "seam";
    s.boxes.push_back(r);
    s.boxes.push_back(l);
  }
  return s;
}

}  // namespace

TEST(Extremes, TightBox) {
  const BBox b = box_from_extremes({5, 1}, {5, 9}, {0, 5}, {10, 5});
  EXPECT_EQ(b.x_min, 0);
  EXPECT_EQ(b.y_min, 1);
  EXPECT_EQ(b.x_max, 10);
  EXPECT_EQ(b.y_max, 9);
  EXPECT_THROW(box_from_extremes({5, 5}, {5, 5}, {5, 5}, {5, 5}), Error);
  EXPECT_THROW(box_from_extremes({5, 9}, {5, 1}, {0, 5}, {10, 5}), Error);
  EXPECT_THROW(box_from_extremes({5, 1}, {5, 9}, {10, 5}, {0, 5}), Error);
}

TEST(Extremes, RandomClicksGiveTheBoundingBox) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 500; ++i) {
    const double x0 = scenes::uniform(rng, 0, 500), x1 = x0 + scenes::uniform(rng, 1, 100);
    const double y0 = scenes::uniform(rng, 0, 500), y1 = y0 + scenes::uniform(rng, 1, 100);
    const BBox b = box_from_extremes({scenes::uniform(rng, x0, x1), y0}, {scenes::uniform(rng, x0, x1), y1},
                                     {x0, scenes::uniform(rng, y0, y1)}, {x1, scenes::uniform(rng, y0, y1)});
    EXPECT_EQ(b.x_min, x0);
    EXPECT_EQ(b.x_max, x1);
    EXPECT_EQ(b.y_min, y0);
    EXPECT_EQ(b.y_max, y1);
  }
}

TEST(Linking, UnionOfRows) {
  BBox left = make_box(ObjectClass::Tram, 0, 100, 40, 300, 10, "t");
  BBox right = make_box(ObjectClass::Tram, 1360, 120, 1400, 310, 10, "t");
  link_boxes(left, right, 1400, "L1");
  EXPECT_EQ(left.y_min, 100);
  EXPECT_EQ(left.y_max, 310);
  EXPECT_EQ(right.y_min, 100);
  EXPECT_EQ(right.y_max, 310);
  EXPECT_EQ(left.link_id, "L1");
  EXPECT_EQ(right.link_id, "L1");

  BoxSet s;
  s.boxes = {left, right};
  EXPECT_TRUE(check_boxset(s).empty());

  const BBox l0 = left, r0 = right;
  unlink_boxes(left, right);
  EXPECT_FALSE(left.link_id || right.link_id);
  link_boxes(right, left, 1400, "L1");
  EXPECT_EQ(left, l0);
  EXPECT_EQ(right, r0);

  BBox a = make_box(ObjectClass::Tram, 100, 100, 140, 300, 10, "t");
  BBox b = make_box(ObjectClass::Tram, 1300, 100, 1340, 300, 10, "t");
  EXPECT_THROW(link_boxes(a, b, 1400, "L2"), Error);
}

TEST(Events, JsonRoundTrip) {
  const std::vector<EditEvent> events = {
      ev(1, EventKind::Move, "p", "b1", {{"dx", 1.5}, {"dy", -2}}),
      ev(2, EventKind::Create, "p", "", {{"points", {{5, 1}, {5, 9}, {0, 5}, {10, 5}}}, {"class", "tree"}}),
      ev(3, EventKind::Done, "p"),
      ev(4, EventKind::Link, "p", "b1", {{"other", "b2"}}),
  };
  for (const auto& e : events) EXPECT_EQ(event_from_json(event_to_json(e)), e);
  EXPECT_THROW(event_from_json({{"seq", 1}, {"kind", "teleport"}, {"image_id", "p"}}), ParseError);
  EXPECT_THROW(event_from_json({{"seq", 1}, {"kind", "create"}, {"image_id", "p"}, {"payload", {{"points", {1}}}}}),
               ParseError);
  EXPECT_THROW(event_from_json({{"kind", "verify"}}), ParseError);
}

TEST(Events, HeaderRoundTrip) {
  std::mt19937_64 rng(8);
  SessionHeader h = header_with({random_image(rng, "x"), random_image(rng, "y")}, {ObjectClass::Tree, ObjectClass::Bus});
  const SessionHeader back = SessionHeader::from_json(h.to_json());
  EXPECT_EQ(back.to_json(), h.to_json());
  EXPECT_EQ(back.class_order, h.class_order);
  EXPECT_EQ(dump_coco(back.images), dump_coco(h.images));
}

TEST(Protocol, AdjustRunsLeftToRight) {
  Session s(header_with({three_buildings()}));
  EXPECT_EQ(s.next_item()["mode"], "adjust");
  std::vector<std::string> seen;
  for (std::uint64_t seq = 1; seq <= 3; ++seq) {
    const auto item = s.next_item();
    ASSERT_EQ(item["mode"], "adjust");
    const std::string id = item["box_ids"][0];
    seen.push_back(id);
    s.apply({ev(seq, EventKind::Verify, "p", id)});
  }
  EXPECT_EQ(seen, (std::vector<std::string>{"b2", "b1", "b3"}));
  EXPECT_EQ(s.stage_of("p"), TaskStage::AddVerify);
}

TEST(Protocol, LinkedPairIsOneItem) {
  BoxSet img;
  img.panorama_id = "p";
  BBox l = make_box(ObjectClass::Tram, 0, 300, 30, 400, 12, "t");
  BBox r = make_box(ObjectClass::Tram, 1380, 300, 1400, 400, 12, "t");
  l.link_id = r.link_id = "seam";
  img.boxes = {r, make_box(ObjectClass::Tram, 10, 100, 20, 120, 5, "u"), l};
  Session s(header_with({img}, {ObjectClass::Tram}));
  EXPECT_EQ(s.next_item()["box_ids"], nlohmann::json({"b1", "b3"}));
  EXPECT_THROW(s.apply({ev(1, EventKind::Move, "p", "b3", {{"dx", 5}, {"dy", 0}})}), EventRejected);
  s.apply({ev(1, EventKind::Move, "p", "b3", {{"dx", 0}, {"dy", 10}})});
  BoxSet now = s.boxset("p");
  EXPECT_EQ(now.boxes[0].y_min, 310);
  EXPECT_EQ(now.boxes[2].y_min, 310);
  EXPECT_THROW(s.apply({ev(2, EventKind::Resize, "p", "b1", {{"x_min", 1300}, {"y_min", 0}, {"x_max", 1390}, {"y_max", 9}})}),
               EventRejected);
  s.apply({ev(2, EventKind::Unlink, "p", "b1"), ev(3, EventKind::Link, "p", "b3", {{"other", "b1"}})});
  now = s.boxset("p");
  EXPECT_EQ(now.boxes[0].link_id, now.boxes[2].link_id);
  EXPECT_TRUE(check_boxset(now).empty());
  s.apply({ev(4, EventKind::Verify, "p", "b1")});
  EXPECT_EQ(s.next_item()["box_ids"], nlohmann::json({"b2"}));
}

TEST(Protocol, OutOfOrderIsRejectedAtomically) {
  Session s(header_with({three_buildings()}));
  try {
    s.apply({ev(1, EventKind::Verify, "p", "b2"), ev(2, EventKind::Verify, "p", "b3")});
    FAIL() << "accepted an out of order event";
  } catch (const EventRejected& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  EXPECT_EQ(s.last_seq(), 0u);
  EXPECT_THROW(s.apply({ev(2, EventKind::Verify, "p", "b2")}), EventRejected);
  EXPECT_THROW(s.apply({ev(1, EventKind::Done, "p")}), EventRejected);
  EXPECT_THROW(s.apply({ev(1, EventKind::Verify, "q", "b2")}), EventRejected);
  EXPECT_THROW(s.apply({ev(1, EventKind::Create, "p", "", {{"points", {{5, 1}, {5, 9}, {0, 5}, {10, 5}}}})}),
               EventRejected);
  EXPECT_THROW(s.apply({ev(1, EventKind::Move, "p", "b1", {{"dx", 0}, {"dy", 5}})}), EventRejected);
  EXPECT_THROW(s.apply({ev(1, EventKind::Move, "p", "b2", {{"dx", -30}, {"dy", 0}})}), EventRejected);

  EXPECT_EQ(s.apply({ev(1, EventKind::Verify, "p", "b2")}), 1u);
  EXPECT_EQ(s.apply({ev(1, EventKind::Verify, "p", "b2")}), 0u);
  EXPECT_THROW(s.apply({ev(1, EventKind::Verify, "p", "b1")}), EventRejected);
}

TEST(Protocol, AddModeFollowsVerification) {
  Session s(header_with({three_buildings()}, {ObjectClass::Tree, ObjectClass::Building}));
  std::uint64_t seq = 0;
  for (const char* id : {"b2", "b1", "b3"}) s.apply({ev(++seq, EventKind::Verify, "p", id)});

  auto item = s.next_item();
  EXPECT_EQ(item["stage"], "add_verify");
  EXPECT_EQ(item["class"], "tree");
  EXPECT_EQ(item["mode"], "add");
  EXPECT_THROW(s.apply({ev(seq + 1, EventKind::Create, "p", "",
                           {{"points", {{505, 101}, {505, 109}, {500, 105}, {510, 105}}}, {"class", "bus"}})}),
               EventRejected);
  s.apply({ev(++seq, EventKind::Create, "p", "", {{"points", {{505, 101}, {505, 109}, {500, 105}, {510, 105}}}})});
  s.apply({ev(++seq, EventKind::Done, "p")});

  item = s.next_item();
  EXPECT_EQ(item["class"], "building");
  EXPECT_EQ(item["mode"], "verify");
  EXPECT_EQ(item["box_ids"], nlohmann::json({"b2"}));
  EXPECT_THROW(s.apply({ev(seq + 1, EventKind::Done, "p")}), EventRejected);
  s.apply({ev(++seq, EventKind::Delete, "p", "b2")});
  s.apply({ev(++seq, EventKind::Verify, "p", "b1")});
  s.apply({ev(++seq, EventKind::Verify, "p", "b3")});
  EXPECT_EQ(s.next_item()["mode"], "add");
  s.apply({ev(++seq, EventKind::Done, "p")});

  item = s.next_item();
  EXPECT_EQ(item["stage"], "final_verify");
  EXPECT_EQ(item["class"], "tree");
  EXPECT_EQ(item["box_ids"], nlohmann::json({"c1"}));

  scenes::accept_all(s, 100000);
  const BoxSet out = s.boxset("p");
  ASSERT_EQ(out.boxes.size(), 3u);
  EXPECT_EQ(out.boxes[2].cls, ObjectClass::Tree);
  EXPECT_EQ(out.boxes[2].source, "annotator");
  EXPECT_EQ(out.boxes[2].x_min, 500);
  EXPECT_EQ(out.boxes[2].y_max, 109);
}

TEST(Protocol, CompletionSignal) {
  Session s(header_with({three_buildings("p"), three_buildings("q")}, {}));
  EXPECT_EQ(s.header().class_order.size(), all_classes().size());
  const auto events = scenes::accept_all(s);
  // Per image: 3 adjusts, then per verify stage 3 verifies and one done per class.
  EXPECT_EQ(events.size(), 2 * (3 + 2 * (3 + all_classes().size())));
  EXPECT_TRUE(s.complete());
  EXPECT_EQ(s.next_item(), nlohmann::json({{"mode", "complete"}}));
  EXPECT_EQ(s.stage_of("q"), TaskStage::Done);
  EXPECT_THROW(s.apply({ev(s.last_seq() + 1, EventKind::Done, "q")}), EventRejected);
  EXPECT_EQ(dump_coco(s.boxsets()), dump_coco({three_buildings("p"), three_buildings("q")}));
}

TEST(Protocol, ImagesInBatchOrder) {
  Session s(header_with({three_buildings("p"), three_buildings("q")}, {ObjectClass::Building}));
  EXPECT_THROW(s.apply({ev(1, EventKind::Verify, "q", "b2")}), EventRejected);
  EXPECT_EQ(s.next_item()["image_id"], "p");
}

TEST(Protocol, TimingIsMeasuredBetweenMarks) {
  Session s(header_with({three_buildings()}));
  s.apply({ev(1, EventKind::Verify, "p", "b2")});
  EditEvent e = ev(2, EventKind::Verify, "p", "b1");
  e.timestamp_ms = 4500;
  s.apply({e});
  ASSERT_EQ(s.timing().size(), 1u);
  EXPECT_EQ(s.timing()[0].seconds, 3.5);
  EXPECT_EQ(s.timing()[0].stage, TaskStage::Adjust);
}

TEST(Replay, ReconstructsRandomSessions) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<BoxSet> images;
    for (int i = 0; i < 3; ++i) images.push_back(random_image(rng, "img" + std::to_string(i)));
    Session s(header_with(images, {ObjectClass::Tram, ObjectClass::Tree, ObjectClass::Building}));
    std::size_t rejected = 0;
    for (int step = 0; step < 400 && !s.complete(); ++step) {
      try {
        s.apply({scenes::random_edit(rng, s)});
      } catch (const EventRejected&) {
        ++rejected;
      }
      const auto issues = check_boxset(s.boxset(s.next_item().value("image_id", "img2")));
      EXPECT_TRUE(issues.empty()) << trial << ": " << (issues.empty() ? "" : issues.front());
      if (step % 50 == 49) {
        const Session r = Session::replay(s.header(), s.log());
        EXPECT_EQ(dump_coco(r.boxsets()), dump_coco(s.boxsets()));
        EXPECT_EQ(r.next_item(), s.next_item());
      }
    }
    scenes::accept_all(s, 10'000'000);
    const Session r = Session::replay(s.header(), s.log());
    EXPECT_TRUE(r.complete());
    EXPECT_EQ(dump_coco(r.boxsets()), dump_coco(s.boxsets()));
    EXPECT_EQ(r.log(), s.log());
    ASSERT_EQ(r.timing().size(), s.timing().size());
    for (std::size_t i = 0; i < r.timing().size(); ++i) EXPECT_EQ(r.timing()[i].seconds, s.timing()[i].seconds);

    std::vector<EditEvent> json_log;
    for (const auto& e : s.log()) json_log.push_back(event_from_json(nlohmann::json::parse(event_to_json(e).dump())));
    EXPECT_EQ(dump_coco(Session::replay(s.header(), json_log).boxsets()), dump_coco(s.boxsets()));
    (void)rejected;
  }
}
