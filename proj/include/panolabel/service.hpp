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


// Batch hand-out, gold scoring and persistence around annotation sessions.

#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "panolabel/annotation.hpp"
#include "panolabel/core.hpp"

namespace panolabel {

class NotFound : public Error {
 public:
  using Error::Error;
};

struct ServiceConfig {
  double gold_threshold = 0.4;
  double qualification_threshold = 0.4;
  std::size_t batch_size = 5;  // images per batch, the hidden gold image included
  std::vector<ObjectClass> class_order;  // empty: table order
  std::uint64_t seed = 0;
  std::filesystem::path state_dir;  // empty: nothing persisted
  std::filesystem::path image_dir;  // optional "<id>.jpg" panorama files
  std::map<std::string, std::string> neighbourhoods;  // image id -> neighbourhood
};

struct GoldImage {
  BoxSet presented;  // what the worker sees
  BoxSet truth;
};

struct FinalizeResult {
  bool accepted = false;
  double gold_median_iou = 0.0;
  std::map<TaskStage, double> median_seconds_per_box;

  nlohmann::json to_json(bool include_score) const;
};

/// Header, events and an optional finalize record of one session log.
struct SessionLog {
  SessionHeader header;
  std::vector<EditEvent> events;
  std::optional<FinalizeResult> finalized;
};

SessionLog read_session_log(const std::filesystem::path& path);

class AnnotationService {
 public:
  /// Sessions found in `config.state_dir` are replayed; their images leave
  /// the queue unless the batch was rejected.
  AnnotationService(ServiceConfig config, std::vector<BoxSet> pool, std::vector<GoldImage> gold);

  /// {"session_id", "batch_id", "images"}. Throws NotFound when the queue
  /// cannot fill a batch.
  nlohmann::json next_batch(const std::string& worker_id);

  /// Session view of an image when `session_id` is given, otherwise the
  /// published set. Gold images are only reachable through a session.
  nlohmann::json image(const std::string& image_id, const std::string& session_id) const;

  /// Body: {"events": [...]} or a bare list. Throws EventRejected.
  nlohmann::json post_events(const std::string& session_id, const nlohmann::json& body);

  nlohmann::json next_item(const std::string& session_id) const;

  /// Scores the gold image, publishes accepted work. Repeated calls return
  /// the stored outcome. Throws Error when the session is incomplete.
  nlohmann::json finalize(const std::string& session_id);

  /// Per neighbourhood: images, accepted/rejected images, box counts and
  /// median seconds per box for each task stage.
  nlohmann::json crowdsourcing_report() const;

  /// Qualification test: gold_score against the qualification threshold.
  bool qualifies(const BoxSet& attempt, const BoxSet& gold) const;

  std::shared_ptr<const BoxSet> published(const std::string& image_id) const;
  Session session_snapshot(const std::string& session_id) const;
  std::optional<FinalizeResult> outcome(const std::string& session_id) const;

 private:
  struct Slot {
    mutable std::mutex mutex;
    Session session;
    std::optional<FinalizeResult> result;
    explicit Slot(Session s) : session(std::move(s)) {}
  };
  using Published = std::map<std::string, std::shared_ptr<const BoxSet>>;

  std::shared_ptr<Slot> slot(const std::string& session_id) const;
  void publish(const BoxSet& set);
  void append_log(const std::string& session_id, const nlohmann::json& record) const;
  FinalizeResult score(const Session& s) const;
  void restore();

  ServiceConfig config_;
  std::map<std::string, BoxSet> pool_;
  std::map<std::string, GoldImage> gold_;
  std::vector<std::string> gold_ids_;

  mutable std::mutex mutex_;  // guards everything below except published_
  std::deque<std::string> queue_;
  std::map<std::string, std::shared_ptr<Slot>> sessions_;
  std::uint64_t counter_ = 0;

  std::shared_ptr<const Published> published_ = std::make_shared<Published>();
};

}  // namespace panolabel
