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


#include "panolabel/service.hpp"

#include <algorithm>
#include <fstream>
#include <random>

#include <httplib.h>

#include "panolabel/coco.hpp"
#include "panolabel/io_util.hpp"
#include "panolabel/metrics.hpp"

namespace panolabel {

namespace {

nlohmann::json boxes_json(const BoxSet& set) {
  auto boxes = nlohmann::json::array();
  for (std::size_t i = 0; i < set.boxes.size(); ++i) {
    const BBox& b = set.boxes[i];
    nlohmann::json j = {{"box_id", "b" + std::to_string(i + 1)},
                        {"class", class_key(b.cls)},
                        {"x_min", b.x_min},
                        {"y_min", b.y_min},
                        {"x_max", b.x_max},
                        {"y_max", b.y_max}};
    if (b.link_id) j["link_id"] = *b.link_id;
    boxes.push_back(std::move(j));
  }
  return boxes;
}

std::optional<TaskStage> parse_task_stage(std::string_view text) {
  for (TaskStage s : {TaskStage::Adjust, TaskStage::AddVerify, TaskStage::FinalVerify, TaskStage::Done}) {
    if (task_stage_name(s) == text) return s;
  }
  return std::nullopt;
}

FinalizeResult finalize_from_json(const nlohmann::json& j) {
  FinalizeResult r;
  r.accepted = j.at("status").get<std::string>() == "accepted";
  r.gold_median_iou = j.value("gold_median_iou", 0.0);
  for (const auto& [k, v] : j.at("median_seconds_per_box").items()) {
    const auto s = parse_task_stage(k);
    if (!s) throw ParseError("unknown task stage " + k);
    r.median_seconds_per_box[*s] = v.get<double>();
  }
  return r;
}

std::filesystem::path log_path(const std::filesystem::path& dir, const std::string& session_id) {
  return dir / "sessions" / (session_id + ".jsonl");
}

}  // namespace

nlohmann::json FinalizeResult::to_json(bool include_score) const {
  nlohmann::json timing = nlohmann::json::object();
  for (const auto& [s, v] : median_seconds_per_box) timing[std::string(task_stage_name(s))] = v;
  nlohmann::json j = {{"status", accepted ? "accepted" : "rejected"}, {"median_seconds_per_box", std::move(timing)}};
  if (include_score) j["gold_median_iou"] = gold_median_iou;
  return j;
}

SessionLog read_session_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open");
  SessionLog log;
  std::string line;
  std::size_t n = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.contains("header")) {
        log.header = SessionHeader::from_json(j.at("header"));
        have_header = true;
      } else if (j.contains("event")) {
        log.events.push_back(event_from_json(j.at("event")));
      } else if (j.contains("finalize")) {
        log.finalized = finalize_from_json(j.at("finalize"));
      } else {
        throw ParseError("unknown record");
      }
    } catch (const std::exception& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  if (!have_header) throw ParseError(path.string() + ": no session header");
  return log;
}

AnnotationService::AnnotationService(ServiceConfig config, std::vector<BoxSet> pool, std::vector<GoldImage> gold)
    : config_(std::move(config)) {
  if (config_.batch_size < 2) throw Error("a batch needs room for the gold image and at least one more");
  for (auto& g : gold) {
    const std::string id = g.truth.panorama_id;
    if (g.presented.panorama_id != id) throw Error("gold image " + id + " presented under another id");
    gold_ids_.push_back(id);
    gold_.emplace(id, std::move(g));
  }
  std::sort(gold_ids_.begin(), gold_ids_.end());
  for (auto& set : pool) {
    if (gold_.count(set.panorama_id)) continue;
    queue_.push_back(set.panorama_id);
    pool_.emplace(set.panorama_id, std::move(set));
  }
  restore();
}

void AnnotationService::restore() {
  if (config_.state_dir.empty() || !std::filesystem::is_directory(config_.state_dir / "sessions")) return;
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(config_.state_dir / "sessions")) {
    if (e.path().extension() == ".jsonl") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    SessionLog log = read_session_log(f);
    auto s = std::make_shared<Slot>(Session::replay(log.header, log.events));
    s->result = log.finalized;
    const std::string& sid = log.header.session_id;
    if (sid.size() > 1 && sid[0] == 's') counter_ = std::max<std::uint64_t>(counter_, std::stoull(sid.substr(1)));
    const bool returned = s->result && !s->result->accepted;
    for (const auto& img : log.header.images) {
      if (img.panorama_id == log.header.gold_image) continue;
      if (!returned) std::erase(queue_, img.panorama_id);
      if (s->result && s->result->accepted) {
        BoxSet done = s->session.boxset(img.panorama_id);
        done.advance_to(Stage::HumanVerified);
        publish(done);
      }
    }
    sessions_[sid] = std::move(s);
  }
}

std::shared_ptr<AnnotationService::Slot> AnnotationService::slot(const std::string& session_id) const {
  std::lock_guard lock(mutex_);
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFound("no session " + session_id);
  return it->second;
}

void AnnotationService::append_log(const std::string& session_id, const nlohmann::json& record) const {
  if (config_.state_dir.empty()) return;
  const auto path = log_path(config_.state_dir, session_id);
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::app);
  out << record.dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + path.string());
}

void AnnotationService::publish(const BoxSet& set) {
  auto current = std::atomic_load(&published_);
  auto next = std::make_shared<Published>(*current);
  (*next)[set.panorama_id] = std::make_shared<const BoxSet>(set);
  std::atomic_store(&published_, std::shared_ptr<const Published>(std::move(next)));
  if (!config_.state_dir.empty()) {
    save_boxset(config_.state_dir / "published" / boxset_filename(set.panorama_id), set);
  }
}

std::shared_ptr<const BoxSet> AnnotationService::published(const std::string& image_id) const {
  const auto snapshot = std::atomic_load(&published_);
  const auto it = snapshot->find(image_id);
  return it == snapshot->end() ? nullptr : it->second;
}

nlohmann::json AnnotationService::next_batch(const std::string& worker_id) {
  if (worker_id.empty()) throw Error("worker id required");
  std::shared_ptr<Slot> s;
  SessionHeader header;
  {
    std::lock_guard lock(mutex_);
    const std::size_t need = config_.batch_size - 1;
    if (gold_ids_.empty()) throw NotFound("no gold images configured");
    if (queue_.size() < need) throw NotFound("not enough images left for a batch");
    ++counter_;
    std::mt19937_64 rng(config_.seed ^ (counter_ * 0x9E3779B97F4A7C15ULL));
    header.session_id = "s" + std::to_string(counter_);
    header.batch_id = "batch" + std::to_string(counter_);
    header.worker_id = worker_id;
    header.class_order = config_.class_order;
    if (header.class_order.empty()) header.class_order.assign(all_classes().begin(), all_classes().end());
    for (std::size_t i = 0; i < need; ++i) {
      header.images.push_back(pool_.at(queue_.front()));
      queue_.pop_front();
    }
    header.gold_image = gold_ids_[rng() % gold_ids_.size()];
    const auto pos = static_cast<std::ptrdiff_t>(rng() % config_.batch_size);
    BoxSet presented = gold_.at(header.gold_image).presented;
    presented.stage = header.images.front().stage;
    header.images.insert(header.images.begin() + pos, std::move(presented));
    s = std::make_shared<Slot>(Session(header));
    sessions_[header.session_id] = s;
  }
  append_log(header.session_id, {{"header", header.to_json()}});
  auto ids = nlohmann::json::array();
  for (const auto& img : header.images) ids.push_back(img.panorama_id);
  return {{"session_id", header.session_id}, {"batch_id", header.batch_id}, {"images", std::move(ids)}};
}

nlohmann::json AnnotationService::image(const std::string& image_id, const std::string& session_id) const {
  nlohmann::json out;
  if (!session_id.empty()) {
    const auto s = slot(session_id);
    std::lock_guard lock(s->mutex);
    try {
      out = s->session.image_view(image_id);
    } catch (const Error&) {
      throw NotFound("image " + image_id + " is not in session " + session_id);
    }
  } else {
    std::shared_ptr<const BoxSet> set = published(image_id);
    if (!set) {
      const auto it = pool_.find(image_id);
      if (it == pool_.end()) throw NotFound("no image " + image_id);
      set = std::make_shared<const BoxSet>(it->second);
    }
    out = {{"image_id", image_id},
           {"width", set->width_px},
           {"height", set->height_px},
           {"stage", stage_name(set->stage)},
           {"boxes", boxes_json(*set)}};
  }
  out["image"] = nullptr;
  if (!config_.image_dir.empty()) {
    const auto file = config_.image_dir / (image_id + ".jpg");
    if (std::filesystem::is_regular_file(file)) out["image"] = httplib::detail::base64_encode(read_text_file(file));
  }
  return out;
}

nlohmann::json AnnotationService::post_events(const std::string& session_id, const nlohmann::json& body) {
  const nlohmann::json& list = body.is_object() && body.contains("events") ? body.at("events") : body;
  if (!list.is_array()) throw ParseError("expected a list of events");
  std::vector<EditEvent> events;
  for (const auto& e : list) events.push_back(event_from_json(e));

  const auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  if (s->result) throw Error("session " + session_id + " is finalized");
  const std::uint64_t before = s->session.last_seq();
  const std::size_t applied = s->session.apply(events);
  for (const auto& e : s->session.log()) {
    if (e.seq > before) append_log(session_id, {{"event", event_to_json(e)}});
  }
  if (applied > 0 && !config_.state_dir.empty()) {
    write_file_atomic(config_.state_dir / "sessions" / (session_id + ".snapshot.json"),
                      dump_coco(s->session.boxsets()));
  }
  return {{"applied", applied}, {"last_seq", s->session.last_seq()}, {"next", s->session.next_item()}};
}

nlohmann::json AnnotationService::next_item(const std::string& session_id) const {
  const auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  return s->session.next_item();
}

FinalizeResult AnnotationService::score(const Session& s) const {
  const auto& gold_id = s.header().gold_image;
  FinalizeResult r;
  const GoldScore g = gold_score(s.boxset(gold_id), gold_.at(gold_id).truth, config_.gold_threshold);
  r.accepted = g.pass;
  r.gold_median_iou = g.median_iou;
  std::map<TaskStage, std::vector<double>> by_stage;
  for (const auto& t : s.timing()) by_stage[t.stage].push_back(t.seconds);
  for (auto& [stage, v] : by_stage) r.median_seconds_per_box[stage] = median(std::move(v));
  return r;
}

nlohmann::json AnnotationService::finalize(const std::string& session_id) {
  const auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  if (!s->result) {
    if (!s->session.complete()) throw Error("session " + session_id + " is incomplete");
    FinalizeResult r = score(s->session);
    const auto& header = s->session.header();
    if (r.accepted) {
      std::lock_guard g(mutex_);
      for (const auto& img : header.images) {
        if (img.panorama_id == header.gold_image) continue;
        BoxSet done = s->session.boxset(img.panorama_id);
        done.advance_to(Stage::HumanVerified);
        publish(done);
      }
    } else {
      std::lock_guard g(mutex_);
      for (const auto& img : header.images) {
        if (img.panorama_id != header.gold_image) queue_.push_back(img.panorama_id);
      }
    }
    append_log(session_id, {{"finalize", r.to_json(true)}});
    s->result = r;
  }
  return s->result->to_json(false);
}

std::optional<FinalizeResult> AnnotationService::outcome(const std::string& session_id) const {
  const auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  return s->result;
}

Session AnnotationService::session_snapshot(const std::string& session_id) const {
  const auto s = slot(session_id);
  std::lock_guard lock(s->mutex);
  return s->session;
}

bool AnnotationService::qualifies(const BoxSet& attempt, const BoxSet& gold) const {
  return gold_score(attempt, gold, config_.qualification_threshold).pass;
}

nlohmann::json AnnotationService::crowdsourcing_report() const {
  struct Row {
    std::size_t images = 0, accepted = 0, rejected = 0, presented = 0, final_boxes = 0, created = 0;
    std::map<TaskStage, std::vector<double>> seconds;
  };
  std::map<std::string, Row> rows;
  Row total;
  auto hood_of = [&](const std::string& id) {
    const auto it = config_.neighbourhoods.find(id);
    return it == config_.neighbourhoods.end() ? std::string("unassigned") : it->second;
  };
  for (const auto& [id, _] : pool_) {
    ++rows[hood_of(id)].images;
    ++total.images;
  }
  std::vector<std::shared_ptr<Slot>> slots;
  {
    std::lock_guard lock(mutex_);
    for (const auto& [_, s] : sessions_) slots.push_back(s);
  }
  for (const auto& s : slots) {
    std::lock_guard lock(s->mutex);
    if (!s->result) continue;
    const auto& header = s->session.header();
    for (const auto& img : header.images) {
      if (img.panorama_id == header.gold_image) continue;
      for (Row* row : {&rows[hood_of(img.panorama_id)], &total}) {
        if (!s->result->accepted) {
          ++row->rejected;
          continue;
        }
        ++row->accepted;
        row->presented += img.boxes.size();
        const BoxSet done = s->session.boxset(img.panorama_id);
        row->final_boxes += done.boxes.size();
        row->created += static_cast<std::size_t>(
            std::count_if(done.boxes.begin(), done.boxes.end(), [](const BBox& b) { return b.source == "annotator"; }));
        for (const auto& t : s->session.timing()) {
          if (t.image_id == img.panorama_id) row->seconds[t.stage].push_back(t.seconds);
        }
      }
    }
  }
  auto row_json = [](const Row& r) {
    nlohmann::json secs = nlohmann::json::object();
    for (TaskStage st : {TaskStage::Adjust, TaskStage::AddVerify, TaskStage::FinalVerify}) {
      const auto it = r.seconds.find(st);
      secs[std::string(task_stage_name(st))] =
          it == r.seconds.end() ? nlohmann::json() : nlohmann::json(median(it->second));
    }
    return nlohmann::json{{"images", r.images},
                          {"accepted_images", r.accepted},
                          {"rejected_images", r.rejected},
                          {"boxes_presented", r.presented},
                          {"boxes_final", r.final_boxes},
                          {"boxes_created", r.created},
                          {"median_seconds_per_box", std::move(secs)}};
  };
  nlohmann::json hoods = nlohmann::json::object();
  for (const auto& [h, r] : rows) hoods[h] = row_json(r);
  return {{"neighbourhoods", std::move(hoods)}, {"total", row_json(total)}};
}

}  // namespace panolabel
