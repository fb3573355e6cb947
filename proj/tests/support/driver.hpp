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

// Scripted annotators: one accepts every presented item, the other makes
// random edits.

#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "panolabel/annotation.hpp"
#include "scenes.hpp"

namespace scenes {

inline panolabel::EditEvent next_accepting_event(const nlohmann::json& item, std::uint64_t seq, std::int64_t ms) {
  panolabel::EditEvent e;
  e.seq = seq;
  e.timestamp_ms = ms;
  e.image_id = item.at("image_id").get<std::string>();
  if (item.at("mode") == "add") {
    e.kind = panolabel::EventKind::Done;
  } else {
    e.kind = panolabel::EventKind::Verify;
    e.box_id = item.at("box_ids").at(0).get<std::string>();
  }
  return e;
}

/// Applies accepting events until the session completes. Returns them.
inline std::vector<panolabel::EditEvent> accept_all(panolabel::Session& s, std::int64_t start_ms = 0,
                                                    std::int64_t step_ms = 1000) {
  std::vector<panolabel::EditEvent> out;
  std::int64_t ms = start_ms;
  while (!s.complete()) {
    const auto e = next_accepting_event(s.next_item(), s.last_seq() + 1, ms);
    ms += step_ms;
    s.apply({e});
    out.push_back(e);
  }
  return out;
}

/// One random edit for the current item; may break the protocol.
inline panolabel::EditEvent random_edit(std::mt19937_64& rng, const panolabel::Session& s) {
  const auto item = s.next_item();
  panolabel::EditEvent e = next_accepting_event(item, s.last_seq() + 1,
                                                static_cast<std::int64_t>(s.last_seq() + 1) * 700 + rng() % 500);
  const int roll = static_cast<int>(rng() % 10);
  if (item["mode"] == "add") {
    if (roll < 4) {
      const double x = uniform(rng, 0, 1300), y = uniform(rng, 0, 600);
      e.kind = panolabel::EventKind::Create;
      e.payload = {{"points", {{x + 20, y}, {x + 20, y + 40}, {x, y + 20}, {x + 50, y + 20}}}};
    }
    return e;
  }
  if (roll == 0) {
    e.kind = panolabel::EventKind::Delete;
  } else if (roll <= 2) {
    e.kind = panolabel::EventKind::Move;
    e.payload = {{"dx", rng() % 2 ? 0.0 : uniform(rng, -20, 20)}, {"dy", uniform(rng, -20, 20)}};
  } else if (roll <= 4) {
    e.kind = panolabel::EventKind::Resize;
    const double x = uniform(rng, 0, 1300), y = uniform(rng, 0, 600);
    e.payload = {{"x_min", x}, {"y_min", y}, {"x_max", x + uniform(rng, 1, 99)}, {"y_max", y + 50}};
  } else if (roll == 5) {
    e.kind = panolabel::EventKind::Unlink;
  }
  return e;
}

}  // namespace scenes
