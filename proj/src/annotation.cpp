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


#include "panolabel/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "panolabel/coco.hpp"
#include "panolabel/seam.hpp"

namespace panolabel {

namespace {

double num(const nlohmann::json& payload, const char* key) {
  const auto it = payload.find(key);
  if (it == payload.end() || !it->is_number()) throw Error(std::string("payload needs number '") + key + "'");
  return it->get<double>();
}

void require_inside(const BBox& b, double w, double h) {
  if (!(b.x_min >= 0.0 && b.x_max <= w && b.y_min >= 0.0 && b.y_max <= h)) throw Error("box leaves the image");
  if (!(b.x_max > b.x_min && b.y_max > b.y_min)) throw Error("box without area");
}

}  // namespace

BBox box_from_extremes(PixelPoint top, PixelPoint bottom, PixelPoint left, PixelPoint right) {
  if (left.x > right.x) throw Error("left-most click lies right of the right-most click");
  if (top.y > bottom.y) throw Error("top click lies below the bottom click");
  const PixelPoint pts[4] = {top, bottom, left, right};
  BBox b;
  b.x_min = b.x_max = top.x;
  b.y_min = b.y_max = top.y;
  for (const auto& p : pts) {
    b.x_min = std::min(b.x_min, p.x);
    b.x_max = std::max(b.x_max, p.x);
    b.y_min = std::min(b.y_min, p.y);
    b.y_max = std::max(b.y_max, p.y);
  }
  if (!(b.width() > 0.0 && b.height() > 0.0)) throw Error("extreme clicks span no area");
  return b;
}

void link_boxes(BBox& a, BBox& b, double width, const std::string& link_id) {
  const bool a_right = a.x_max >= width - kEdgeEps && b.x_min <= kEdgeEps;
  const bool b_right = b.x_max >= width - kEdgeEps && a.x_min <= kEdgeEps;
  if (!a_right && !b_right) throw Error("linked boxes must touch opposite image edges");
  const double y0 = std::min(a.y_min, b.y_min);
  const double y1 = std::max(a.y_max, b.y_max);
  a.y_min = b.y_min = y0;
  a.y_max = b.y_max = y1;
  a.link_id = b.link_id = link_id;
}

void unlink_boxes(BBox& a, BBox& b) {
  a.link_id.reset();
  b.link_id.reset();
}

std::string_view task_stage_name(TaskStage s) {
  switch (s) {
    case TaskStage::Adjust:
      return "adjust";
    case TaskStage::AddVerify:
      return "add_verify";
    case TaskStage::FinalVerify:
      return "final_verify";
    case TaskStage::Done:
      return "done";
  }
  return "?";
}

namespace {
constexpr std::pair<EventKind, std::string_view> kKinds[] = {
    {EventKind::Move, "move"},     {EventKind::Resize, "resize"}, {EventKind::Delete, "delete"},
    {EventKind::Create, "create"}, {EventKind::Link, "link"},     {EventKind::Unlink, "unlink"},
    {EventKind::Verify, "verify"}, {EventKind::Done, "done"},
};
}  // namespace

std::string_view event_kind_name(EventKind k) {
  for (const auto& [kind, name] : kKinds) {
    if (kind == k) return name;
  }
  return "?";
}

std::optional<EventKind> parse_event_kind(std::string_view text) {
  for (const auto& [kind, name] : kKinds) {
    if (name == text) return kind;
  }
  return std::nullopt;
}

nlohmann::json event_to_json(const EditEvent& e) {
  nlohmann::json j = {{"seq", e.seq},
                      {"kind", event_kind_name(e.kind)},
                      {"image_id", e.image_id},
                      {"payload", e.payload},
                      {"timestamp_ms", e.timestamp_ms}};
  if (!e.box_id.empty()) j["box_id"] = e.box_id;
  return j;
}

EditEvent event_from_json(const nlohmann::json& j) {
  try {
    EditEvent e;
    e.seq = j.at("seq").get<std::uint64_t>();
    const auto kind = parse_event_kind(j.at("kind").get<std::string>());
    if (!kind) throw ParseError("unknown event kind " + j.at("kind").dump());
    e.kind = *kind;
    e.image_id = j.at("image_id").get<std::string>();
    e.box_id = j.value("box_id", std::string());
    e.payload = j.value("payload", nlohmann::json::object());
    if (!e.payload.is_object()) throw ParseError("event payload must be an object");
    e.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
    if (e.kind == EventKind::Create) {
      const auto& pts = e.payload.at("points");
      if (!pts.is_array() || pts.size() != 4) throw ParseError("create needs exactly 4 extreme points");
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("event: ") + ex.what());
  }
}

nlohmann::json SessionHeader::to_json() const {
  auto order = nlohmann::json::array();
  for (ObjectClass c : class_order) order.push_back(class_key(c));
  return {{"session_id", session_id}, {"worker_id", worker_id}, {"batch_id", batch_id},
          {"gold_image", gold_image}, {"class_order", std::move(order)}, {"images", to_coco(images)}};
}

SessionHeader SessionHeader::from_json(const nlohmann::json& j) {
  try {
    SessionHeader h;
    h.session_id = j.at("session_id").get<std::string>();
    h.worker_id = j.at("worker_id").get<std::string>();
    h.batch_id = j.at("batch_id").get<std::string>();
    h.gold_image = j.at("gold_image").get<std::string>();
    for (const auto& c : j.at("class_order")) {
      const auto cls = parse_class(c.get<std::string>());
      if (!cls) throw ParseError("unknown class " + c.dump());
      h.class_order.push_back(*cls);
    }
    h.images = from_coco(j.at("images"));
    return h;
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("session header: ") + ex.what());
  }
}

Session::Session(SessionHeader header) : header_(std::move(header)) {
  if (header_.class_order.empty()) header_.class_order.assign(all_classes().begin(), all_classes().end());
  for (const auto& set : header_.images) {
    ImageState img;
    img.meta = set;
    img.meta.boxes.clear();
    for (std::size_t i = 0; i < set.boxes.size(); ++i) img.boxes.push_back({"b" + std::to_string(i + 1), set.boxes[i]});
    settle(img, header_);
    state_.images.push_back(std::move(img));
  }
  while (state_.current < state_.images.size() && state_.images[state_.current].stage == TaskStage::Done) {
    ++state_.current;
  }
}

std::vector<std::vector<std::string>> Session::pending_items(const ImageState& img, const SessionHeader& header) {
  BoxSet view = img.meta;
  for (const auto& w : img.boxes) view.boxes.push_back(w.box);
  const bool by_class = img.stage == TaskStage::AddVerify || img.stage == TaskStage::FinalVerify;
  const ObjectClass cls =
      by_class && img.class_cursor < header.class_order.size() ? header.class_order[img.class_cursor] : ObjectClass{};

  struct Item {
    double x;
    std::vector<std::string> ids;
  };
  std::vector<Item> items;
  for (const auto& inst : seam_instances(view)) {
    if (by_class && view.boxes[inst.members.front()].cls != cls) continue;
    Item it{std::numeric_limits<double>::infinity(), {}};
    bool open = false;
    for (std::size_t m : inst.members) {
      it.x = std::min(it.x, view.boxes[m].x_min);
      it.ids.push_back(img.boxes[m].id);
      if (!img.resolved.count(img.boxes[m].id)) open = true;
    }
    if (open) items.push_back(std::move(it));
  }
  std::stable_sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.x < b.x; });
  std::vector<std::vector<std::string>> out;
  for (auto& it : items) out.push_back(std::move(it.ids));
  return out;
}

void Session::settle(ImageState& img, const SessionHeader& header) {
  while (true) {
    switch (img.stage) {
      case TaskStage::Done:
        return;
      case TaskStage::Adjust:
        if (!pending_items(img, header).empty()) return;
        img.stage = TaskStage::AddVerify;
        img.class_cursor = 0;
        img.add_mode = false;
        img.resolved.clear();
        continue;
      case TaskStage::AddVerify:
      case TaskStage::FinalVerify:
        if (img.add_mode) return;
        if (img.class_cursor >= header.class_order.size()) {
          img.stage = img.stage == TaskStage::AddVerify ? TaskStage::FinalVerify : TaskStage::Done;
          img.class_cursor = 0;
          img.resolved.clear();
          continue;
        }
        if (pending_items(img, header).empty()) img.add_mode = true;
        return;
    }
  }
}

void Session::apply_one(State& st, const SessionHeader& header, const EditEvent& e) {
  if (st.current >= st.images.size()) throw Error("session is complete");
  ImageState& img = st.images[st.current];
  if (e.image_id != img.meta.panorama_id) {
    throw Error("out of order: the current image is " + img.meta.panorama_id + ", not " + e.image_id);
  }
  const double w = img.meta.width_px;
  const double h = img.meta.height_px;
  const auto pending = pending_items(img, header);
  const std::vector<std::string> cursor = img.add_mode || pending.empty() ? std::vector<std::string>{} : pending.front();
  const ObjectClass cursor_class =
      img.stage != TaskStage::Adjust && img.class_cursor < header.class_order.size()
          ? header.class_order[img.class_cursor]
          : ObjectClass{};

  auto find = [&](const std::string& id) -> std::size_t {
    for (std::size_t i = 0; i < img.boxes.size(); ++i) {
      if (img.boxes[i].id == id) return i;
    }
    throw Error("no box " + id + " in image " + img.meta.panorama_id);
  };
  auto partner = [&](std::size_t i) -> std::optional<std::size_t> {
    if (!img.boxes[i].box.link_id) return std::nullopt;
    for (std::size_t j = 0; j < img.boxes.size(); ++j) {
      if (j != i && img.boxes[j].box.link_id == img.boxes[i].box.link_id) return j;
    }
    return std::nullopt;
  };
  auto at_cursor = [&](const std::string& id) { return std::find(cursor.begin(), cursor.end(), id) != cursor.end(); };
  auto editable = [&](std::size_t i) {
    if (img.add_mode) return img.boxes[i].box.cls == cursor_class;
    return at_cursor(img.boxes[i].id);
  };
  auto record = [&] {
    if (st.last_mark_ms) st.timing.push_back({img.meta.panorama_id, img.stage, (e.timestamp_ms - *st.last_mark_ms) / 1000.0});
    st.last_mark_ms = e.timestamp_ms;
  };

  switch (e.kind) {
    case EventKind::Verify:
    case EventKind::Delete: {
      if (img.add_mode) throw Error("nothing to verify in add mode; send done");
      if (!at_cursor(e.box_id)) throw Error("out of order: box " + e.box_id + " is not the current item");
      record();
      if (e.kind == EventKind::Verify) {
        img.resolved.insert(cursor.begin(), cursor.end());
      } else {
        std::erase_if(img.boxes, [&](const Working& wb) { return at_cursor(wb.id); });
      }
      break;
    }
    case EventKind::Move:
    case EventKind::Resize: {
      const std::size_t i = find(e.box_id);
      if (!editable(i)) throw Error("out of order: box " + e.box_id + " is not editable now");
      BBox next = img.boxes[i].box;
      const auto other = partner(i);
      if (e.kind == EventKind::Move) {
        const double dx = num(e.payload, "dx");
        const double dy = num(e.payload, "dy");
        if (other && dx != 0.0) throw Error("a linked box cannot move sideways; unlink it first");
        next.x_min += dx;
        next.x_max += dx;
        next.y_min += dy;
        next.y_max += dy;
      } else {
        next.x_min = num(e.payload, "x_min");
        next.y_min = num(e.payload, "y_min");
        next.x_max = num(e.payload, "x_max");
        next.y_max = num(e.payload, "y_max");
      }
      require_inside(next, w, h);
      if (other) {
        const BBox& o = img.boxes[*other].box;
        const bool right = o.x_min <= kEdgeEps;  // partner on the left edge
        if (right ? next.x_max < w - kEdgeEps : next.x_min > kEdgeEps) {
          throw Error("a linked box must keep touching its image edge");
        }
        img.boxes[*other].box.y_min = next.y_min;
        img.boxes[*other].box.y_max = next.y_max;
      }
      img.boxes[i].box = next;
      break;
    }
    case EventKind::Create: {
      if (!img.add_mode) throw Error("out of order: boxes are created only in add mode");
      const auto& pts = e.payload.at("points");
      auto pt = [&](std::size_t k) {
        if (!pts[k].is_array() || pts[k].size() != 2) throw Error("extreme points are [x, y] pairs");
        return PixelPoint{pts[k][0].get<double>(), pts[k][1].get<double>()};
      };
      BBox box = box_from_extremes(pt(0), pt(1), pt(2), pt(3));
      if (e.payload.contains("class")) {
        const auto cls = parse_class(e.payload.at("class").get<std::string>());
        if (!cls || *cls != cursor_class) throw Error("out of order: add mode is for class " + std::string(class_key(cursor_class)));
      }
      box.cls = cursor_class;
      box.source = "annotator";
      require_inside(box, w, h);
      record();
      const std::string id = "c" + std::to_string(++img.created);
      img.boxes.push_back({id, box});
      img.resolved.insert(id);
      break;
    }
    case EventKind::Link: {
      const std::size_t i = find(e.box_id);
      if (!e.payload.contains("other") || !e.payload.at("other").is_string()) throw Error("link needs 'other'");
      const std::size_t j = find(e.payload.at("other").get<std::string>());
      if (i == j) throw Error("a box cannot link to itself");
      if (img.boxes[i].box.link_id || img.boxes[j].box.link_id) throw Error("box already linked");
      if (img.boxes[i].box.cls != img.boxes[j].box.cls) throw Error("linked boxes must share a class");
      BBox a = img.boxes[i].box, b = img.boxes[j].box;
      link_boxes(a, b, w, "L" + std::to_string(st.links + 1));
      ++st.links;
      img.boxes[i].box = a;
      img.boxes[j].box = b;
      break;
    }
    case EventKind::Unlink: {
      const std::size_t i = find(e.box_id);
      const auto j = partner(i);
      if (!j) throw Error("box " + e.box_id + " is not linked");
      unlink_boxes(img.boxes[i].box, img.boxes[*j].box);
      break;
    }
    case EventKind::Done: {
      if (!img.add_mode) throw Error("out of order: done closes add mode only");
      img.add_mode = false;
      ++img.class_cursor;
      st.last_mark_ms = e.timestamp_ms;
      break;
    }
  }
  settle(img, header);
  while (st.current < st.images.size() && st.images[st.current].stage == TaskStage::Done) ++st.current;
}

std::size_t Session::apply(const std::vector<EditEvent>& events) {
  State st = state_;
  std::vector<EditEvent> log = log_;
  std::size_t applied = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const EditEvent& e = events[i];
    const std::uint64_t last = log.empty() ? 0 : log.back().seq;
    if (e.seq >= 1 && e.seq <= last) {
      if (log[e.seq - 1] == e) continue;
      throw EventRejected(i, "seq " + std::to_string(e.seq) + " was already used by a different event");
    }
    if (e.seq != last + 1) throw EventRejected(i, "expected seq " + std::to_string(last + 1));
    try {
      apply_one(st, header_, e);
    } catch (const EventRejected&) {
      throw;
    } catch (const Error& ex) {
      throw EventRejected(i, ex.what());
    } catch (const nlohmann::json::exception& ex) {
      throw EventRejected(i, ex.what());
    }
    log.push_back(e);
    ++applied;
  }
  state_ = std::move(st);
  log_ = std::move(log);
  return applied;
}

nlohmann::json Session::describe(const State& st, const SessionHeader& header) {
  if (st.current >= st.images.size()) return {{"mode", "complete"}};
  const ImageState& img = st.images[st.current];
  nlohmann::json j = {{"image_id", img.meta.panorama_id}, {"stage", task_stage_name(img.stage)}};
  if (img.stage != TaskStage::Adjust) j["class"] = class_key(header.class_order[img.class_cursor]);
  if (img.add_mode) {
    j["mode"] = "add";
    j["box_ids"] = nlohmann::json::array();
  } else {
    j["mode"] = img.stage == TaskStage::Adjust ? "adjust" : "verify";
    j["box_ids"] = pending_items(img, header).front();
  }
  return j;
}

nlohmann::json Session::next_item() const { return describe(state_, header_); }

bool Session::complete() const { return state_.current >= state_.images.size(); }

TaskStage Session::stage_of(const std::string& image_id) const {
  for (const auto& img : state_.images) {
    if (img.meta.panorama_id == image_id) return img.stage;
  }
  throw Error("image " + image_id + " is not in this session");
}

BoxSet Session::boxset(const std::string& image_id) const {
  for (const auto& img : state_.images) {
    if (img.meta.panorama_id != image_id) continue;
    BoxSet out = img.meta;
    for (const auto& w : img.boxes) out.boxes.push_back(w.box);
    return out;
  }
  throw Error("image " + image_id + " is not in this session");
}

std::vector<BoxSet> Session::boxsets() const {
  std::vector<BoxSet> out;
  for (const auto& img : state_.images) out.push_back(boxset(img.meta.panorama_id));
  return out;
}

nlohmann::json Session::image_view(const std::string& image_id) const {
  for (const auto& img : state_.images) {
    if (img.meta.panorama_id != image_id) continue;
    auto boxes = nlohmann::json::array();
    for (const auto& w : img.boxes) {
      nlohmann::json b = {{"box_id", w.id},
                          {"class", class_key(w.box.cls)},
                          {"x_min", w.box.x_min},
                          {"y_min", w.box.y_min},
                          {"x_max", w.box.x_max},
                          {"y_max", w.box.y_max}};
      if (w.box.link_id) b["link_id"] = *w.box.link_id;
      boxes.push_back(std::move(b));
    }
    return {{"image_id", image_id},
            {"width", img.meta.width_px},
            {"height", img.meta.height_px},
            {"stage", task_stage_name(img.stage)},
            {"boxes", std::move(boxes)}};
  }
  throw Error("image " + image_id + " is not in this session");
}

Session Session::replay(const SessionHeader& header, const std::vector<EditEvent>& log) {
  Session s(header);
  s.apply(log);
  return s;
}

}  // namespace panolabel
