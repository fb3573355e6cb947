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

#include "panolabel/config.hpp"

using namespace panolabel;

TEST(Config, DefaultsRoundTrip) {
  const Config c;
  const Config back = Config::parse(c.dump());
  EXPECT_EQ(back.dump(), c.dump());
  EXPECT_EQ(c.measure.radius_m, 150.0);
  EXPECT_EQ(c.camera_heights.land_m, 2.0);
  EXPECT_EQ(c.camera_heights.water_m, 1.0);
  EXPECT_EQ(c.refine.tree_threshold, 0.3);
  EXPECT_EQ(c.refine.general_threshold, 0.8);
  EXPECT_EQ(c.gold_threshold, 0.4);
}

TEST(Config, ParsesValues) {
  const Config c = Config::parse(
      "# thresholds\n"
      "tree_threshold = 0.25   # tighter\n"
      "\n"
      "  batch_size=7\n"
      "class_order = tree, building\n"
      "non_blocking = tree\n"
      "camera_height_water_m = 1.5\n");
  EXPECT_EQ(c.refine.tree_threshold, 0.25);
  EXPECT_EQ(c.batch_size, 7u);
  EXPECT_EQ(c.class_order, (std::vector<ObjectClass>{ObjectClass::Tree, ObjectClass::Building}));
  EXPECT_EQ(c.refine.non_blocking, ClassSet{ObjectClass::Tree});
  EXPECT_EQ(c.camera_heights.water_m, 1.5);
  const Config back = Config::parse(c.dump());
  EXPECT_EQ(back.dump(), c.dump());
  EXPECT_EQ(back.class_order, c.class_order);
}

TEST(Config, ErrorsNameTheLine) {
  auto message = [](const std::string& text) {
    try {
      Config::parse(text, "cfg");
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string("no error");
  };
  EXPECT_NE(message("tree_threshold = 0.3\nfrobnicate = 1\n").find("cfg:2"), std::string::npos);
  EXPECT_NE(message("frobnicate = 1\n").find("frobnicate"), std::string::npos);
  EXPECT_NE(message("\n\ntree_threshold = lots\n").find("cfg:3"), std::string::npos);
  EXPECT_NE(message("batch_size = 2.5\n").find("cfg:1"), std::string::npos);
  EXPECT_NE(message("class_order = tree, dragon\n").find("dragon"), std::string::npos);
  EXPECT_NE(message("just words\n").find("cfg:1"), std::string::npos);
}
