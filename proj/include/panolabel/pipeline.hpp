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

#include <cstddef>
#include <functional>

#include "panolabel/config.hpp"
#include "panolabel/core.hpp"
#include "panolabel/geometry.hpp"
#include "panolabel/ingest.hpp"

namespace panolabel {

struct GenerateStats {
  std::size_t candidates = 0;    // objects within the radius
  std::size_t boxes = 0;
  std::size_t camera_inside = 0;  // skipped: camera inside the footprint
  std::size_t full_turn = 0;      // skipped: object surrounds the camera
  std::size_t too_small = 0;      // projected below the minimum extent
};

/// Generated boxes for one panorama, in object storage order.
BoxSet generate_boxset(const PanoramaMeta& pano, const ObjectStore& store, const ClassTable& specs,
                       ElevationPair elevation, const Config& config, GenerateStats* stats = nullptr);

/// Runs fn(0..n-1) on up to `threads` workers (0: hardware concurrency).
/// The first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace panolabel
