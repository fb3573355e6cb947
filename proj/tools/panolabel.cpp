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


// panolabel: command-line front end for the annotation pipeline.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>

#include "panolabel/coco.hpp"
#include "panolabel/config.hpp"
#include "panolabel/dataset.hpp"
#include "panolabel/http.hpp"
#include "panolabel/ingest.hpp"
#include "panolabel/io_util.hpp"
#include "panolabel/metrics.hpp"
#include "panolabel/noise.hpp"
#include "panolabel/pipeline.hpp"
#include "panolabel/refine.hpp"
#include "panolabel/service.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace panolabel;

namespace {

std::mutex g_log_mutex;

void log(const char* level, const std::string& msg, json extra = json::object()) {
  extra["level"] = level;
  extra["msg"] = msg;
  std::lock_guard lock(g_log_mutex);
  std::cerr << extra.dump() << '\n';
}

struct Globals {
  std::string config_path;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  Config config() const { return config_path.empty() ? Config{} : Config::load(config_path); }
};

void write_json(const fs::path& path, const json& j) { write_file_atomic(path, j.dump(1) + "\n"); }

std::map<std::string, std::string> load_string_map(const fs::path& path) {
  const json j = read_json_file(path);
  if (!j.is_object()) throw ParseError(path.string() + ": expected an object of strings");
  std::map<std::string, std::string> out;
  for (const auto& [k, v] : j.items()) {
    if (!v.is_string()) throw ParseError(path.string() + ": value of '" + k + "' is not a string");
    out[k] = v.get<std::string>();
  }
  return out;
}

void save_dir(const fs::path& dir, const std::vector<BoxSet>& sets, unsigned threads) {
  fs::create_directories(dir);
  parallel_for(sets.size(), threads,
               [&](std::size_t i) { save_boxset(dir / boxset_filename(sets[i].panorama_id), sets[i]); });
}

// ---------------------------------------------------------------------------

struct FilterArgs {
  std::string poses, out;
};

int run_filter(const Globals& g, const FilterArgs& a) {
  const Config cfg = g.config();
  const auto poses = load_poses(a.poses);
  const auto kept = density_filter(poses, cfg.density_min_separation_m);
  std::ostringstream out;
  write_poses(out, kept);
  write_file_atomic(a.out, out.str());
  log("info", "filtered poses", {{"input", poses.size()}, {"kept", kept.size()}});
  return 0;
}

struct GenerateArgs {
  std::string objects, dsm, dtm, poses, out, mapping;
  bool refine = false;
};

int run_generate(const Globals& g, const GenerateArgs& a) {
  const Config cfg = g.config();
  if (a.dsm.empty() != a.dtm.empty()) throw Error("--dsm and --dtm go together");
  const ClassMapping mapping = a.mapping.empty() ? ClassMapping::defaults() : ClassMapping::load(a.mapping);
  LoadedObjects loaded = load_objects(a.objects, mapping);
  for (const auto& e : loaded.errors) log("warn", e.message, {{"feature", e.feature_index}});
  if (loaded.unmapped > 0) log("warn", "features without a class rule skipped", {{"count", loaded.unmapped}});
  std::optional<ElevationGrid> dsm, dtm;
  if (!a.dsm.empty()) {
    dsm = load_grid(a.dsm);
    dtm = load_grid(a.dtm);
  }
  const ElevationPair elevation{dsm ? &*dsm : nullptr, dtm ? &*dtm : nullptr};
  const auto poses = load_poses(a.poses);
  const ClassTable& specs = ClassTable::defaults();
  fs::create_directories(a.out);

  std::vector<std::size_t> boxes(poses.size());
  parallel_for(poses.size(), g.threads, [&](std::size_t i) {
    BoxSet set = generate_boxset(poses[i], loaded.store, specs, elevation, cfg);
    if (a.refine) set = refine_pipeline(set, cfg.refine);
    boxes[i] = set.boxes.size();
    save_boxset(fs::path(a.out) / boxset_filename(set.panorama_id), set);
  });
  std::size_t total = 0;
  for (auto n : boxes) total += n;
  log("info", "generated", {{"panoramas", poses.size()}, {"boxes", total}, {"refined", a.refine}});
  return 0;
}

struct DirArgs {
  std::string in, out;
};

int run_refine(const Globals& g, const DirArgs& a) {
  const Config cfg = g.config();
  auto sets = load_boxset_dir(a.in);
  parallel_for(sets.size(), g.threads, [&](std::size_t i) { sets[i] = refine_pipeline(sets[i], cfg.refine); });
  save_dir(a.out, sets, g.threads);
  log("info", "refined", {{"panoramas", sets.size()}});
  return 0;
}

struct NoiseArgs {
  std::string noisy, clean, out, csv_dir;
};

int run_noise(const Globals& g, const NoiseArgs& a) {
  const auto noisy = load_boxset_dir(a.noisy);
  const auto clean = load_boxset_dir(a.clean);
  const auto pairs = pair_by_panorama(noisy, clean);
  std::vector<MatchReport> parts(pairs.size());
  std::vector<LabelReport> labels(pairs.size());
  parallel_for(pairs.size(), g.threads, [&](std::size_t i) {
    parts[i] = overlap_report(*pairs[i].first, *pairs[i].second);
    parts[i].shifts = shift_report(*pairs[i].first, *pairs[i].second);
    labels[i] = label_report(*pairs[i].first, *pairs[i].second);
  });
  MatchReport report;
  LabelReport label;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    report.merge(parts[i]);
    label.merge(labels[i]);
  }
  write_json(a.out, {{"overlap", report.to_json()}, {"labels", label.to_json()}});
  if (!a.csv_dir.empty()) {
    fs::create_directories(a.csv_dir);
    for (const auto& [cls, o] : report.per_class) {
      const std::string key(class_key(cls));
      write_file_atomic(fs::path(a.csv_dir) / ("iou_" + key + ".csv"), histogram_csv(o.ious, 0.0, 1.0, 20));
      write_file_atomic(fs::path(a.csv_dir) / ("giou_" + key + ".csv"), histogram_csv(o.gious, -1.0, 1.0, 40));
    }
    std::vector<double> c[4];
    for (const auto& s : report.shifts) {
      c[0].push_back(s.dx_min);
      c[1].push_back(s.dy_min);
      c[2].push_back(s.dx_max);
      c[3].push_back(s.dy_max);
    }
    const char* names[4] = {"dx_min", "dy_min", "dx_max", "dy_max"};
    for (int k = 0; k < 4; ++k) {
      write_file_atomic(fs::path(a.csv_dir) / ("shift_" + std::string(names[k]) + ".csv"),
                        histogram_csv(c[k], -100.0, 100.0, 40));
    }
  }
  log("info", "noise report", {{"panoramas", pairs.size()}});
  return 0;
}

struct StatsArgs {
  std::string in, out, csv;
};

int run_stats(const Globals& g, const StatsArgs& a) {
  const Config cfg = g.config();
  const auto stats = dataset_stats(load_boxset_dir(a.in), cfg.top_band_px, cfg.bottom_band_px);
  write_json(a.out, stats.to_json());
  if (!a.csv.empty()) write_file_atomic(a.csv, stats.to_csv());
  return 0;
}

struct SplitArgs {
  std::string in, neighbourhoods, out;
  std::vector<std::string> require;
};

int run_split(const Globals& g, const SplitArgs& a) {
  const Config cfg = g.config();
  const auto sets = load_boxset_dir(a.in);
  SplitRequest req;
  req.presence = presence_from_boxsets(sets);
  for (const auto& [id, _] : req.presence) req.images.push_back(id);
  req.neighbourhoods = load_string_map(a.neighbourhoods);
  req.targets = cfg.split_targets;
  req.seed = g.seed;
  for (const auto& r : a.require) {
    const auto colon = r.find(':');
    const auto split = parse_split(r.substr(0, colon));
    const auto cls = colon == std::string::npos ? std::nullopt : parse_class(r.substr(colon + 1));
    if (!split || !cls) throw ParseError("--require expects split:class, got '" + r + "'");
    req.required[static_cast<std::size_t>(*split)].insert(*cls);
  }
  const auto assignment = group_split(req);
  write_json(a.out, assignment.to_json());
  std::array<std::size_t, 3> counts{};
  for (const auto& [_, s] : assignment.split) ++counts[static_cast<std::size_t>(s)];
  log("info", "split", {{"train", counts[0]}, {"val", counts[1]}, {"test", counts[2]}});
  return 0;
}

int run_sample(const Globals& g, const DirArgs& a) {
  const Config cfg = g.config();
  const auto plan = repeat_factors(presence_from_boxsets(load_boxset_dir(a.in)), cfg.rfs_t, g.seed);
  write_json(a.out, plan.to_json());
  log("info", "sampling plan", {{"epoch", plan.epoch.size()}, {"expected", plan.expected_epoch_size()}});
  return 0;
}

struct TransformArgs {
  std::string in, out, mode = "pad";
  int width = 1400, height = 700;
};

int run_transform(const Globals& g, const TransformArgs& a) {
  const Config cfg = g.config();
  auto sets = load_boxset_dir(a.in);
  if (a.mode == "pad") {
    parallel_for(sets.size(), g.threads, [&](std::size_t i) { sets[i] = circular_pad(sets[i], cfg.pad); });
    save_dir(a.out, sets, g.threads);
  } else if (a.mode == "unpad") {
    parallel_for(sets.size(), g.threads,
                 [&](std::size_t i) { sets[i] = circular_unpad(sets[i], a.width, a.height, cfg.pad); });
    save_dir(a.out, sets, g.threads);
  } else if (a.mode == "tiles") {
    json images = json::object();
    for (const auto& s : sets) {
      auto tiles = json::array();
      for (const auto& t : classification_tiles(circular_pad(s, cfg.pad), cfg.tiles)) {
        auto pos = json::array();
        for (ObjectClass c : t.positives) pos.push_back(class_key(c));
        tiles.push_back({{"index", t.index},
                         {"x_offset", t.x_offset},
                         {"y_offset", t.y_offset},
                         {"size_px", t.size_px},
                         {"output_px", t.output_px},
                         {"positives", std::move(pos)}});
      }
      images[s.panorama_id] = std::move(tiles);
    }
    write_json(a.out, {{"images", std::move(images)}});
  } else {
    throw Error("unknown transform mode '" + a.mode + "'");
  }
  log("info", "transformed", {{"mode", a.mode}, {"panoramas", sets.size()}});
  return 0;
}

struct EvalArgs {
  std::string truth, detections, out, pred_labels;
  double label_score = 0.5;
};

int run_eval(const Globals&, const EvalArgs& a) {
  const auto truth = load_boxset_dir(a.truth);
  const auto dets = detections_from_json(read_json_file(a.detections));
  const auto coco = coco_map(dets, truth);
  json out = {{"coco", coco.to_json()}, {"recall_at_100", recall_at_k(dets, truth, 100)}};

  const PresenceMap true_labels = presence_from_boxsets(truth);
  PresenceMap pred;
  if (!a.pred_labels.empty()) {
    for (const auto& [id, classes] : read_json_file(a.pred_labels).items()) {
      auto& set = pred[id];
      for (const auto& c : classes) {
        const auto cls = parse_class(c.get<std::string>());
        if (!cls) throw ParseError("unknown class " + c.dump() + " for image " + id);
        set.insert(*cls);
      }
    }
  } else {
    for (const auto& [id, _] : true_labels) pred[id];
    for (const auto& d : dets) {
      if (d.score >= a.label_score && pred.count(d.image_id)) pred[d.image_id].insert(d.cls);
    }
  }
  out["fscore"] = weighted_fscore(pred, true_labels).to_json();
  write_json(a.out, out);
  log("info", "evaluated", {{"map", coco.map}, {"map50", coco.map50}});
  return 0;
}

struct ServeArgs {
  std::string pool, gold, state_dir, images, neighbourhoods, host = "127.0.0.1";
  int port = 8080;
};

int run_serve(const Globals& g, const ServeArgs& a) {
  const Config cfg = g.config();
  ServiceConfig sc;
  sc.gold_threshold = cfg.gold_threshold;
  sc.qualification_threshold = cfg.qualification_threshold;
  sc.batch_size = cfg.batch_size;
  sc.class_order = cfg.class_order;
  sc.seed = g.seed;
  sc.state_dir = a.state_dir;
  sc.image_dir = a.images;
  if (!a.neighbourhoods.empty()) sc.neighbourhoods = load_string_map(a.neighbourhoods);
  auto pool = load_boxset_dir(a.pool);
  std::vector<GoldImage> gold;
  std::map<std::string, const BoxSet*> by_id;
  for (const auto& s : pool) by_id[s.panorama_id] = &s;
  for (auto& truth : load_boxset_dir(a.gold)) {
    const auto it = by_id.find(truth.panorama_id);
    BoxSet presented = it != by_id.end() ? *it->second : truth;
    gold.push_back({std::move(presented), std::move(truth)});
  }
  AnnotationService service(sc, std::move(pool), std::move(gold));
  log("info", "listening", {{"host", a.host}, {"port", a.port}});
  if (!serve(service, a.host, a.port)) throw Error("cannot listen on " + a.host + ":" + std::to_string(a.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"panolabel: bounding-box annotations for street panoramas"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key = value threshold file")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "seed for every randomized step");
  app.add_option("--threads", g.threads, "worker threads (0: all cores)");

  FilterArgs filter;
  auto* c_filter = app.add_subcommand("filter", "density-filter panorama poses");
  c_filter->add_option("--poses", filter.poses)->required()->check(CLI::ExistingFile);
  c_filter->add_option("--out", filter.out)->required();

  GenerateArgs gen;
  auto* c_gen = app.add_subcommand("generate", "objects + elevation + poses -> generated box sets");
  c_gen->add_option("--objects", gen.objects)->required()->check(CLI::ExistingFile);
  c_gen->add_option("--dsm", gen.dsm)->check(CLI::ExistingFile);
  c_gen->add_option("--dtm", gen.dtm)->check(CLI::ExistingFile);
  c_gen->add_option("--poses", gen.poses)->required()->check(CLI::ExistingFile);
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--mapping", gen.mapping, "tag -> class JSON")->check(CLI::ExistingFile);
  c_gen->add_flag("--refine", gen.refine, "also run the refinement rules");

  DirArgs refine;
  auto* c_refine = app.add_subcommand("refine", "apply the occlusion rules to generated sets");
  c_refine->add_option("--in", refine.in)->required()->check(CLI::ExistingDirectory);
  c_refine->add_option("--out", refine.out)->required();

  NoiseArgs noise;
  auto* c_noise = app.add_subcommand("noise", "compare noisy and clean annotations");
  c_noise->add_option("--noisy", noise.noisy)->required()->check(CLI::ExistingDirectory);
  c_noise->add_option("--clean", noise.clean)->required()->check(CLI::ExistingDirectory);
  c_noise->add_option("--out", noise.out)->required();
  c_noise->add_option("--csv-dir", noise.csv_dir, "histogram CSVs");

  StatsArgs stats;
  auto* c_stats = app.add_subcommand("stats", "dataset statistics");
  c_stats->add_option("--in", stats.in)->required()->check(CLI::ExistingDirectory);
  c_stats->add_option("--out", stats.out)->required();
  c_stats->add_option("--csv", stats.csv);

  SplitArgs split;
  auto* c_split = app.add_subcommand("split", "neighbourhood-grouped train/val/test split");
  c_split->add_option("--in", split.in)->required()->check(CLI::ExistingDirectory);
  c_split->add_option("--neighbourhoods", split.neighbourhoods, "image -> neighbourhood JSON")
      ->required()
      ->check(CLI::ExistingFile);
  c_split->add_option("--out", split.out)->required();
  c_split->add_option("--require", split.require, "split:class that must be present");

  DirArgs sample;
  auto* c_sample = app.add_subcommand("sample", "repeat factor sampling plan");
  c_sample->add_option("--in", sample.in)->required()->check(CLI::ExistingDirectory);
  c_sample->add_option("--out", sample.out)->required();

  TransformArgs transform;
  auto* c_transform = app.add_subcommand("transform", "circular padding, its inverse, or classification tiles");
  c_transform->add_option("--in", transform.in)->required()->check(CLI::ExistingDirectory);
  c_transform->add_option("--out", transform.out)->required();
  c_transform->add_option("--mode", transform.mode)->check(CLI::IsMember({"pad", "unpad", "tiles"}));
  c_transform->add_option("--width", transform.width, "original width for unpad");
  c_transform->add_option("--height", transform.height, "original height for unpad");

  EvalArgs eval;
  auto* c_eval = app.add_subcommand("eval", "F-score, COCO mAP and recall@100");
  c_eval->add_option("--truth", eval.truth)->required()->check(CLI::ExistingDirectory);
  c_eval->add_option("--detections", eval.detections, "COCO results JSON")->required()->check(CLI::ExistingFile);
  c_eval->add_option("--out", eval.out)->required();
  c_eval->add_option("--pred-labels", eval.pred_labels, "image -> [class] JSON")->check(CLI::ExistingFile);
  c_eval->add_option("--label-score", eval.label_score, "detection score that counts as an image label");

  ServeArgs serve_args;
  auto* c_serve = app.add_subcommand("serve", "annotation service over HTTP");
  c_serve->add_option("--pool", serve_args.pool, "box sets to annotate")->required()->check(CLI::ExistingDirectory);
  c_serve->add_option("--gold", serve_args.gold, "gold standard sets")->required()->check(CLI::ExistingDirectory);
  c_serve->add_option("--state-dir", serve_args.state_dir, "event logs and snapshots");
  c_serve->add_option("--images", serve_args.images, "directory of <id>.jpg panoramas");
  c_serve->add_option("--neighbourhoods", serve_args.neighbourhoods)->check(CLI::ExistingFile);
  c_serve->add_option("--host", serve_args.host);
  c_serve->add_option("--port", serve_args.port);

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_filter->parsed()) return run_filter(g, filter);
    if (c_gen->parsed()) return run_generate(g, gen);
    if (c_refine->parsed()) return run_refine(g, refine);
    if (c_noise->parsed()) return run_noise(g, noise);
    if (c_stats->parsed()) return run_stats(g, stats);
    if (c_split->parsed()) return run_split(g, split);
    if (c_sample->parsed()) return run_sample(g, sample);
    if (c_transform->parsed()) return run_transform(g, transform);
    if (c_eval->parsed()) return run_eval(g, eval);
    if (c_serve->parsed()) return run_serve(g, serve_args);
  } catch (const std::exception& e) {
    log("error", e.what());
    return 1;
  }
  return 2;
}
