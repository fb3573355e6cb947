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

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include "panolabel/coco.hpp"
#include "panolabel/ingest.hpp"
#include "panolabel/io_util.hpp"
#include "scenes.hpp"

using namespace panolabel;
namespace fs = std::filesystem;

namespace {

struct Workdir {
  fs::path path;
  Workdir() {
    path = fs::temp_directory_path() / ("panolabel_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~Workdir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(PANOLABEL_CLI) + " " + args + " 2>/dev/null";
  const int rc = std::system(cmd.c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

}  // namespace

TEST(Cli, GenerateWritesOneSetPerPanorama) {
  Workdir w;
  std::mt19937_64 rng(4);
  std::vector<UrbanObject> objects;
  std::vector<PanoramaMeta> poses;
  for (int i = 0; i < 3; ++i) {
    auto scene = scenes::rotate_scene(scenes::random_scene(rng, {.max_objects = 10}), 0.0, {5000.0 * i, 0.0});
    scene.pano.id = "pano" + std::to_string(i);
    for (auto& o : scene.objects) {
      o.id = "s" + std::to_string(i) + o.id;
      objects.push_back(o);
    }
    poses.push_back(scene.pano);
  }
  save_objects(w / "objects.geojson", objects);
  {
    std::ofstream out(w / "poses.jsonl");
    write_poses(out, poses);
  }
  ASSERT_EQ(run("generate --objects " + (w / "objects.geojson") + " --poses " + (w / "poses.jsonl") + " --out " +
                (w / "gen")),
            0);
  const auto sets = load_boxset_dir(w / "gen");
  ASSERT_EQ(sets.size(), 3u);
  for (const auto& s : sets) {
    EXPECT_EQ(s.stage, Stage::Generated);
    EXPECT_TRUE(check_boxset(s).empty());
    for (const auto& b : s.boxes) EXPECT_EQ(b.object_id->substr(0, 2), "s" + s.panorama_id.substr(4));
  }

  ASSERT_EQ(run("refine --in " + (w / "gen") + " --out " + (w / "ref")), 0);
  for (const auto& s : load_boxset_dir(w / "ref")) EXPECT_EQ(s.stage, Stage::Refined);
}

TEST(Cli, RefineSixBoxScene) {
  Workdir w;
  fs::create_directories(w / "in");
  save_boxset(w / "in/six.json", scenes::six_box_scene());
  ASSERT_EQ(run("refine --in " + (w / "in") + " --out " + (w / "out")), 0);
  const auto out = load_boxset_dir(w / "out");
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(dump_coco(out), dump_coco({scenes::six_box_expected()}));
}

TEST(Cli, NoiseOnIdenticalSets) {
  Workdir w;
  fs::create_directories(w / "a");
  std::mt19937_64 rng(5);
  for (int i = 0; i < 3; ++i) {
    BoxSet s;
    s.panorama_id = "p" + std::to_string(i);
    for (int k = 0; k < 4; ++k) s.boxes.push_back(scenes::random_box(rng, 600, k % 2 ? ObjectClass::Tree : ObjectClass::Bus));
    save_boxset(w / ("a/" + boxset_filename(s.panorama_id).string()), s);
  }
  fs::copy(w / "a", w / "b");
  ASSERT_EQ(run("noise --noisy " + (w / "a") + " --clean " + (w / "b") + " --out " + (w / "noise.json") +
                " --csv-dir " + (w / "csv")),
            0);
  const auto j = read_json_file(w / "noise.json");
  ASSERT_EQ(j["overlap"]["classes"].size(), 2u);
  for (const auto& [_, c] : j["overlap"]["classes"].items()) {
    EXPECT_EQ(c["matched_noisy_fraction"], 1.0);
    EXPECT_EQ(c["matched_clean_fraction"], 1.0);
    for (const auto& p : c["pairs"]) EXPECT_EQ(p[0], 1.0);
  }
  EXPECT_TRUE(fs::exists(w / "csv/iou_tree.csv"));
}

TEST(Cli, DatasetCommands) {
  Workdir w;
  fs::create_directories(w / "sets");
  std::mt19937_64 rng(6);
  nlohmann::json hoods = nlohmann::json::object();
  for (int i = 0; i < 20; ++i) {
    BoxSet s;
    s.panorama_id = "p" + std::to_string(i);
    s.boxes.push_back(scenes::random_box(rng, 600, i % 3 ? ObjectClass::Tree : ObjectClass::Bus));
    save_boxset(w / ("sets/" + boxset_filename(s.panorama_id).string()), s);
    hoods[s.panorama_id] = "h" + std::to_string(i % 10);
  }
  { std::ofstream(w / "hoods.json") << hoods.dump(); }
  EXPECT_EQ(run("stats --in " + (w / "sets") + " --out " + (w / "stats.json") + " --csv " + (w / "stats.csv")), 0);
  EXPECT_EQ(run("--seed 3 split --in " + (w / "sets") + " --neighbourhoods " + (w / "hoods.json") + " --out " +
                (w / "split.json")),
            0);
  EXPECT_EQ(run("sample --in " + (w / "sets") + " --out " + (w / "plan.json")), 0);
  EXPECT_EQ(run("transform --mode pad --in " + (w / "sets") + " --out " + (w / "padded")), 0);
  EXPECT_EQ(run("transform --mode unpad --in " + (w / "padded") + " --out " + (w / "unpadded")), 0);
  EXPECT_EQ(run("transform --mode tiles --in " + (w / "sets") + " --out " + (w / "tiles.json")), 0);
  EXPECT_EQ(load_boxset_dir(w / "unpadded").size(), 20u);
  EXPECT_EQ(read_json_file(w / "tiles.json")["images"].size(), 20u);
  EXPECT_TRUE(fs::exists(w / "stats.csv"));
  EXPECT_TRUE(fs::exists(w / "split.json"));
  EXPECT_TRUE(fs::exists(w / "plan.json"));
}

TEST(Cli, EvalPerfectDetections) {
  Workdir w;
  fs::create_directories(w / "truth");
  BoxSet s;
  s.panorama_id = "p";
  s.boxes = {scenes::make_box(ObjectClass::Tree, 10, 10, 50, 90, 5, "t")};
  save_boxset(w / "truth/p.json", s);
  {
    std::ofstream(w / "dets.json")
        << R"([{"image_id": "p", "category_id": )" << category_id(ObjectClass::Tree)
        << R"(, "bbox": [10, 10, 40, 80], "score": 0.9}])";
  }
  ASSERT_EQ(run("eval --truth " + (w / "truth") + " --detections " + (w / "dets.json") + " --out " + (w / "eval.json")),
            0);
  const auto j = read_json_file(w / "eval.json");
  EXPECT_EQ(j["recall_at_100"], 1.0);
  EXPECT_EQ(j["fscore"]["weighted_f"], 1.0);
}

TEST(Cli, MissingInputsFail) {
  Workdir w;
  EXPECT_NE(run(""), 0);
  EXPECT_NE(run("refine --in " + (w / "nope") + " --out " + (w / "out")), 0);
  EXPECT_NE(run("generate --objects " + (w / "nope.geojson") + " --poses " + (w / "nope") + " --out " + (w / "o")), 0);
  { std::ofstream(w / "bad.json") << "{not json"; }
  fs::create_directories(w / "broken");
  fs::copy(w / "bad.json", w / "broken/bad.json");
  EXPECT_NE(run("refine --in " + (w / "broken") + " --out " + (w / "out")), 0);
  EXPECT_NE(run("transform --mode spin --in " + (w / "broken") + " --out " + (w / "out")), 0);
}
