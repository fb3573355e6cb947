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


// Annotation sessions: the adjust / add-and-verify / final-verify protocol
// driven by an append-only event log.

#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "panolabel/core.hpp"

namespace panolabel {

struct PixelPoint {
  double x = 0.0;
  double y = 0.0;
};

/// Tight box around four extreme clicks (top, bottom, left-most,
/// right-most). Throws Error on inverted extremes or a zero-area result.
BBox box_from_extremes(PixelPoint top, PixelPoint bottom, PixelPoint left, PixelPoint right);

/// Links a box on the right edge with one on the left edge (either argument
/// order). Both get `link_id` and the union of their y ranges. Throws Error
/// unless one box touches x = 0 and the other x = width.
void link_boxes(BBox& a, BBox& b, double width, const std::string& link_id);
void unlink_boxes(BBox& a, BBox& b);

enum class TaskStage : std::uint8_t { Adjust, AddVerify, FinalVerify, Done };
std::string_view task_stage_name(TaskStage s);

enum class EventKind : std::uint8_t { Move, Resize, Delete, Create, Link, Unlink, Verify, Done };
std::string_view event_kind_name(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view text);

/// One edit. `seq` numbers the events of a session from 1 without gaps.
/// Payloads: move {"dx","dy"}; resize {"x_min","y_min","x_max","y_max"};
/// create {"points": [top, bottom, left, right] as [x, y], "class"?};
/// link {"other": box id}; the rest carry none.
struct EditEvent {
  std::uint64_t seq = 0;
  EventKind kind = EventKind::Verify;
  std::string image_id;
  std::string box_id;
  nlohmann::json payload = nlohmann::json::object();
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const EditEvent&, const EditEvent&) = default;
};

nlohmann::json event_to_json(const EditEvent& e);
EditEvent event_from_json(const nlohmann::json& j);  // throws ParseError

/// Everything needed to rebuild a session from its log.
struct SessionHeader {
  std::string session_id;
  std::string worker_id;
  std::string batch_id;
  std::vector<BoxSet> images;   // presented boxes, batch order
  std::string gold_image;       // server side only
  std::vector<ObjectClass> class_order;

  nlohmann::json to_json() const;
  static SessionHeader from_json(const nlohmann::json& j);
};

class EventRejected : public Error {
 public:
  EventRejected(std::size_t index, const std::string& reason)
      : Error("event " + std::to_string(index) + ": " + reason), index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

struct TimingSample {
  std::string image_id;
  TaskStage stage = TaskStage::Adjust;
  double seconds = 0.0;
};

class Session {
 public:
  explicit Session(SessionHeader header);

  const SessionHeader& header() const { return header_; }

  /// All-or-nothing. Events already in the log (same seq and content) are
  /// skipped; a gap, a conflicting repeat or a protocol violation throws
  /// EventRejected and leaves the session unchanged. Returns the number of
  /// newly applied events.
  std::size_t apply(const std::vector<EditEvent>& events);

  /// The current protocol step: {"mode": "adjust" | "verify" | "add" |
  /// "complete", "image_id", "stage", "class", "box_ids"}.
  nlohmann::json next_item() const;

  bool complete() const;
  TaskStage stage_of(const std::string& image_id) const;
  std::uint64_t last_seq() const { return log_.empty() ? 0 : log_.back().seq; }
  const std::vector<EditEvent>& log() const { return log_; }
  const std::vector<TimingSample>& timing() const { return state_.timing; }

  /// Current boxes, batch order. Box ids are kept in metadata under
  /// "box_id" only in `image_view`, never in these sets.
  std::vector<BoxSet> boxsets() const;
  BoxSet boxset(const std::string& image_id) const;

  /// Client view of one image: boxes with ids, task stage.
  nlohmann::json image_view(const std::string& image_id) const;

  /// Fresh session with `header` and every event of `log` applied.
  static Session replay(const SessionHeader& header, const std::vector<EditEvent>& log);

 private:
  struct Working {
    std::string id;
    BBox box;
  };
  struct ImageState {
    BoxSet meta;  // boxes unused; id, size, stage
    std::vector<Working> boxes;
    TaskStage stage = TaskStage::Adjust;
    std::size_t class_cursor = 0;
    bool add_mode = false;
    std::set<std::string> resolved;  // box ids handled in the current phase
    std::size_t created = 0;
  };
  struct State {
    std::vector<ImageState> images;
    std::size_t current = 0;
    std::size_t links = 0;
    std::optional<std::int64_t> last_mark_ms;
    std::vector<TimingSample> timing;
  };

  static void apply_one(State& st, const SessionHeader& header, const EditEvent& e);
  static void settle(ImageState& img, const SessionHeader& header);
  static std::vector<std::vector<std::string>> pending_items(const ImageState& img, const SessionHeader& header);
  static nlohmann::json describe(const State& st, const SessionHeader& header);

  SessionHeader header_;
  State state_;
  std::vector<EditEvent> log_;
};

}  // namespace panolabel
