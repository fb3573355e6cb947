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


#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "panolabel/core.hpp"

namespace panolabel {

/// Image-level class presence, keyed by image id.
using PresenceMap = std::map<std::string, std::set<ObjectClass>>;

PresenceMap presence_from_boxsets(const std::vector<BoxSet>& sets);

struct FScoreReport {
  struct PerClass {
    double precision = 0.0;
    double recall = 0.0;
    double f = 0.0;
    std::size_t support = 0;  // images where the class is truly present
  };
  std::map<ObjectClass, PerClass> per_class;  // classes with support only
  double weighted_f = 0.0;

  nlohmann::json to_json() const;
};

/// Per-class F from image-level presence, aggregated with support weights.
/// Throws Error on empty input or differing image sets.
FScoreReport weighted_fscore(const PresenceMap& predicted, const PresenceMap& truth);

struct Detection {
  std::string image_id;
  ObjectClass cls = ObjectClass::Building;
  BBox box;
  double score = 0.0;
};

std::vector<double> coco_iou_thresholds();  // 0.50, 0.55, ..., 0.95

struct CocoResult {
  std::vector<double> thresholds;
  std::map<ObjectClass, std::vector<double>> ap;  // per threshold, classes with truth only
  double map = 0.0;                               // mean over thresholds and classes
  double map50 = 0.0;                             // mean over classes at 0.50 (NaN-free; 0 without classes)

  double class_ap(ObjectClass c) const;  // mean over thresholds
  nlohmann::json to_json() const;
};

/// COCO protocol: per image and class the top `max_dets` detections by
/// score; greedy matching by descending score to the best-IoU unmatched
/// truth; 101-point interpolated AP.
CocoResult coco_map(const std::vector<Detection>& dets, const std::vector<BoxSet>& truth,
                    const std::vector<double>& thresholds = coco_iou_thresholds(), std::size_t max_dets = 100);

/// Recall with the top `k` detections per image (over all classes), averaged
/// over thresholds and classes with truth. No truth gives 0.
double recall_at_k(const std::vector<Detection>& dets, const std::vector<BoxSet>& truth, std::size_t k = 100,
                   const std::vector<double>& thresholds = coco_iou_thresholds());

struct GoldScore {
  double median_iou = 0.0;
  bool pass = false;
  std::vector<double> samples;  // matched IoUs, then one 0 per unmatched gold box
};

/// Class-restricted optimal matching against the gold set; unmatched gold
/// boxes score 0. Throws Error for an empty gold set or differing panoramas.
GoldScore gold_score(const BoxSet& worker, const BoxSet& gold, double threshold = 0.4);

double median(std::vector<double> values);

}  // namespace panolabel
