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


#include "panolabel/pipeline.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "panolabel/projection.hpp"

namespace panolabel {

BoxSet generate_boxset(const PanoramaMeta& pano, const ObjectStore& store, const ClassTable& specs,
                       ElevationPair elevation, const Config& config, GenerateStats* stats) {
  GenerateStats local;
  BoxSet set;
  set.panorama_id = pano.id;
  set.width_px = pano.width_px;
  set.height_px = pano.height_px;
  set.stage = Stage::Generated;
  const CameraModel cm = CameraModel::for_panorama(pano, config.camera_heights, config.forward_x_fraction);

  for (const UrbanObject* obj : query_radius(store, pano.position, config.measure.radius_m)) {
    ++local.candidates;
    const auto m = measure(*obj, pano.position, specs, elevation, config.measure);
    if (!m) {
      ++local.camera_inside;
      continue;
    }
    std::vector<BBox> boxes;
    try {
      boxes = project_box(cm, *m, config.min_extent_px);
    } catch (const ProjectionError&) {
      ++local.full_turn;
      continue;
    }
    if (boxes.empty()) ++local.too_small;
    for (auto& b : boxes) set.boxes.push_back(std::move(b));
  }
  local.boxes = set.boxes.size();
  if (stats) *stats = local;
  return set;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first;
  std::mutex m;
  auto work = [&] {
    while (!failed) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(m);
        if (!first) first = std::current_exception();
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

}  // namespace panolabel
