// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/cli/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>
#include <set>

#include "stimkit/flow/image.hpp"
#include "stimkit/flow/optical_flow.hpp"
#include "stimkit/flow/render.hpp"
#include "stimkit/nn/checkpoint.hpp"
#include "stimkit/pose/features.hpp"
#include "stimkit/pose/manifest.hpp"
#include "stimkit/pose/openpose_io.hpp"

namespace stimkit::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIo:
    case ErrorKind::kParse:
    case ErrorKind::kFormat:
      return kExitIo;
    case ErrorKind::kNumeric:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ordered_json metrics_json(const eval::ConfusionMatrix& cm, const eval::Metrics& m) {
  return {{"confusion", {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}}},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"degenerate", m.degenerate}};
}

eval::WindowDataset load_windows(const RunConfig& config, Io io) {
  if (config.dataset.empty()) fail(ErrorKind::kConfig, "dataset: required for this command");
  const pose::Manifest manifest = pose::load_manifest(config.dataset);
  eval::WindowDataset data = eval::load_dataset(manifest, config.window, config.confidence_threshold);
  for (const auto& c : data.clips) {
    if (c.too_short) io.err << "warning: clip " << c.clip.clip_id << " is shorter than one window\n";
  }
  return data;
}

pose::RasterSpec raster_from_json(const json& j) {
  pose::RasterSpec s;
  s.width = j.at("width").get<int>();
  s.height = j.at("height").get<int>();
  s.point_radius = j.at("point_radius").get<double>();
  s.line_thickness = j.at("line_thickness").get<double>();
  s.center_mode = j.at("center").get<std::string>() == "none" ? pose::CenterMode::kNone
                                                              : pose::CenterMode::kSequenceMean;
  s.validate();
  return s;
}

}  // namespace

void cmd_import(const ImportOptions& o, Io io) {
  if (!fs::is_directory(o.openpose_dir)) {
    fail(ErrorKind::kConfig, "import: not a directory: " + o.openpose_dir.string());
  }
  if (o.frame_width <= 0 || o.frame_height <= 0) {
    fail(ErrorKind::kConfig, "import: frame width and height must be positive");
  }
  std::vector<fs::path> clip_dirs;
  for (const auto& entry : fs::directory_iterator(o.openpose_dir)) {
    if (entry.is_directory()) clip_dirs.push_back(entry.path());
  }
  std::sort(clip_dirs.begin(), clip_dirs.end());
  if (clip_dirs.empty()) fail(ErrorKind::kConfig, "import: no clip directories in " + o.openpose_dir.string());

  pose::Manifest manifest;
  manifest.frame_size = {o.frame_width, o.frame_height};
  const fs::path base = o.manifest_out.parent_path();
  for (const fs::path& dir : clip_dirs) {
    const std::vector<pose::PoseFrame> frames = pose::read_keypoint_source(dir);
    const std::string id = dir.filename().string();
    if (frames.empty()) {
      io.err << "warning: clip " << id << " has no frame files, skipped\n";
      continue;
    }
    const std::string rel = "keypoints/" + id + ".json";
    nn::write_file_atomic(base / rel, pose::write_consolidated(frames));
    pose::ClipRecord r;
    r.clip_id = id;
    r.subject_id = "UNSET";
    r.label = pose::Label::kUnset;
    r.fps = o.fps;
    r.keypoint_source = rel;
    r.start_frame = frames.front().frame_index;
    r.end_frame = frames.back().frame_index;
    manifest.clips.push_back(r);
    io.out << id << "\t" << frames.size() << " frames\n";
  }
  if (manifest.clips.empty()) fail(ErrorKind::kConfig, "import: no frames found under " + o.openpose_dir.string());
  nn::write_file_atomic(o.manifest_out, pose::serialize_manifest(manifest));
}

std::vector<fs::path> cmd_flowviz(const FlowvizOptions& o, Io io) {
  if (o.frames.size() < 2) fail(ErrorKind::kConfig, "flowviz: need at least 2 frames");
  if (o.spacing < 1) fail(ErrorKind::kConfig, "flowviz: spacing must be >= 1");
  const bool png = o.png && flow::png_supported();
  if (o.png && !png) io.err << "warning: built without PNG support, writing PPM\n";
  std::vector<fs::path> written;
  flow::GrayImage prev = flow::read_gray_image(o.frames[0]);
  for (std::size_t i = 1; i < o.frames.size(); ++i) {
    flow::GrayImage next = flow::read_gray_image(o.frames[i]);
    if (next.width != prev.width || next.height != prev.height) {
      fail(ErrorKind::kSize, "flowviz: " + o.frames[i].string() + " differs in size from the previous frame");
    }
    flow::FlowField field;
    flow::RgbImage image;
    if (o.method == FlowMethod::kLucasKanade) {
      flow::LucasKanadeParams p;
      p.spacing = o.spacing;
      field = flow::lucas_kanade_grid(prev, next, p);
      flow::ArrowStyle style;
      style.scale = o.arrow_scale;
      image = flow::render_arrows(field, o.isolation ? nullptr : &prev, style);
    } else {
      field = flow::farneback_dense(prev, next);
      image = flow::hsv_to_rgb(flow::flow_to_hsv(field));
    }
    char stem[32];
    std::snprintf(stem, sizeof stem, "flow_%04zu", i - 1);
    const fs::path path = o.out_dir / (std::string(stem) + (png ? ".png" : ".ppm"));
    fs::create_directories(o.out_dir);
    fs::path tmp = path;
    tmp += ".tmp";
    if (png) {
      flow::write_png(image, tmp);
    } else {
      flow::write_ppm(image, tmp);
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorKind::kIo, "cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    written.push_back(path);
    if (o.dump_json) {
      ordered_json points = ordered_json::array(), vectors = ordered_json::array(), valid = ordered_json::array();
      for (std::size_t k = 0; k < field.size(); ++k) {
        points.push_back({field.points[k].x, field.points[k].y});
        vectors.push_back({field.vectors[k].u, field.vectors[k].v});
        valid.push_back(field.valid[k] != 0);
      }
      const ordered_json doc = {{"kind", field.kind == flow::FlowKind::kDense ? "dense" : "sparse_grid"},
                                {"width", field.width},
                                {"height", field.height},
                                {"points", points},
                                {"vectors", vectors},
                                {"valid", valid}};
      nn::write_file_atomic(o.out_dir / (std::string(stem) + ".json"), doc.dump() + "\n");
    }
    io.out << path.string() << "\t" << field.valid_count() << "/" << field.size() << " valid\n";
    prev = std::move(next);
  }
  return written;
}

fs::path cmd_synth(const RunConfig& config, Io io) {
  const fs::path manifest = synth::gen_dataset(config.synth, config.output_dir);
  io.out << "wrote " << config.synth.subjects * config.synth.clips_per_subject << " clips, "
         << config.synth.subjects << " subjects: " << manifest.string() << "\n";
  return manifest;
}

void cmd_train(const RunConfig& config, Io io) {
  const eval::WindowDataset data = load_windows(config, io);
  const std::set<std::string> holdout(config.holdout_subjects.begin(), config.holdout_subjects.end());
  std::set<std::string> seen;
  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < data.windows.size(); ++i) {
    const std::string& s = data.windows[i].subject_id;
    seen.insert(s);
    (holdout.count(s) ? test_idx : train_idx).push_back(i);
  }
  for (const std::string& s : holdout) {
    if (!seen.count(s)) fail(ErrorKind::kConfig, "holdout_subjects: no windows for subject `" + s + "`");
  }
  if (train_idx.empty()) fail(ErrorKind::kConfig, "dataset has no training windows");

  std::vector<pose::Label> labels;
  for (std::size_t i : train_idx) labels.push_back(data.windows[i].label);
  const augment::AugmentSpec* aug = config.augment ? &*config.augment : nullptr;
  io.err << "training on " << train_idx.size() << " windows for " << config.train.epochs << " epochs\n";
  nn::TrainResult trained = nn::train(
      config.model, labels,
      [&](std::size_t i, std::uint64_t draw_seed) {
        return eval::make_input(data.windows[train_idx[i]], config.raster, aug, draw_seed);
      },
      config.train);

  const eval::CvOptions options = cv_options(config);
  nn::ModelCheckpoint ck = nn::ModelCheckpoint::from_model(
      trained.model, {trained.history.size(), trained.history.empty() ? 0.0 : trained.history.back(),
                      config.train.seed});
  ck.preprocess = {{"raster", eval::raster_to_json(config.raster)},
                   {"window", eval::window_to_json(config.window)},
                   {"confidence_threshold", config.confidence_threshold}};

  ordered_json holdout_json;
  if (!test_idx.empty()) {
    std::vector<double> probs;
    std::vector<pose::Label> test_labels;
    for (std::size_t i : test_idx) {
      probs.push_back(trained.model.predict(pose::rasterize(data.windows[i], config.raster)));
      test_labels.push_back(data.windows[i].label);
    }
    const eval::ConfusionMatrix cm = eval::confusion(probs, test_labels);
    const eval::Metrics m = eval::precision_recall_f1(cm);
    holdout_json = metrics_json(cm, m);
    holdout_json["subjects"] = config.holdout_subjects;
    holdout_json["windows"] = test_idx.size();
    io.out << "holdout F1 " << fixed(m.f1) << " (P " << fixed(m.precision) << ", R " << fixed(m.recall) << ") on "
           << test_idx.size() << " windows\n";
  }
  const ordered_json opts = eval::options_to_json(options);
  const ordered_json history = {{"format_version", 1},
                                {"fingerprint", eval::fingerprint(opts)},
                                {"seed", config.seed},
                                {"train_windows", train_idx.size()},
                                {"loss_history", trained.history},
                                {"holdout", holdout_json},
                                {"options", opts}};
  nn::save_checkpoint(ck, config.output_dir / "model.ckpt");
  nn::write_file_atomic(config.output_dir / "history.json", history.dump(2) + "\n");
  io.out << "final loss " << fixed(trained.history.empty() ? 0.0 : trained.history.back(), 6) << "; wrote "
         << (config.output_dir / "model.ckpt").string() << "\n";
}

eval::CvReport cmd_cv(const RunConfig& config, Io io) {
  const eval::WindowDataset data = load_windows(config, io);
  const eval::CvReport report =
      eval::cross_validate(data, cv_options(config), [&](const std::string& line) { io.err << line << "\n"; });
  for (const std::string& w : report.warnings) io.err << "warning: " << w << "\n";

  for (const eval::FoldResult& f : report.per_fold) {
    nn::save_checkpoint(f.checkpoint, config.output_dir / ("fold" + std::to_string(f.fold) + ".ckpt"));
  }
  nn::write_file_atomic(config.output_dir / "cv_report.json", eval::report_to_json(report).dump(2) + "\n");
  nn::write_file_atomic(config.output_dir / "predictions.csv", eval::predictions_csv(report));

  io.out << "fold  windows  precision  recall  F1      clip F1  test subjects\n";
  for (const eval::FoldResult& f : report.per_fold) {
    std::string subjects;
    for (const std::string& s : f.test_subjects) subjects += (subjects.empty() ? "" : ",") + s;
    char line[128];
    std::snprintf(line, sizeof line, "%-4zu  %-7zu  %-9s  %-6s  %-6s  %-7s  ", f.fold, f.test_windows,
                  fixed(f.metrics.precision).c_str(), fixed(f.metrics.recall).c_str(), fixed(f.metrics.f1).c_str(),
                  fixed(f.clip_metrics.f1).c_str());
    io.out << line << subjects << "\n";
  }
  io.out << "mean F1 " << fixed(report.mean_f1) << " (" << fixed(100.0 * report.mean_f1, 2) << "%), clip-vote mean F1 "
         << fixed(report.clip_mean_f1) << "\n";
  return report;
}

void cmd_predict(const PredictOptions& o, Io io) {
  const nn::ModelCheckpoint ck = nn::load_checkpoint(o.checkpoint);
  const nn::Model<float> model = ck.to_model();
  pose::RasterSpec raster;
  pose::WindowParams window;
  double threshold = pose::kDefaultConfidenceThreshold;
  try {
    if (ck.preprocess.contains("raster")) raster = raster_from_json(ck.preprocess.at("raster"));
    if (ck.preprocess.contains("window")) {
      const json& w = ck.preprocess.at("window");
      window = {w.at("length").get<int>(), w.at("stride").get<int>(), w.at("hop").get<int>()};
    }
    if (ck.preprocess.contains("confidence_threshold")) {
      threshold = ck.preprocess.at("confidence_threshold").get<double>();
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::kFormat, o.checkpoint.string() + ": bad preprocess block: " + e.what());
  }
  if (o.window) window = *o.window;
  if (static_cast<std::size_t>(window.length) != model.config().length ||
      static_cast<std::size_t>(raster.height) != model.config().height ||
      static_cast<std::size_t>(raster.width) != model.config().width) {
    fail(ErrorKind::kConfig, "window length and raster size must match the checkpoint's model");
  }

  pose::ClipRecord clip;
  pose::FrameSize frame_size;
  std::vector<pose::PoseFrame> frames;
  if (o.manifest) {
    const pose::Manifest manifest = pose::load_manifest(*o.manifest);
    const auto it = std::find_if(manifest.clips.begin(), manifest.clips.end(),
                                 [&](const pose::ClipRecord& c) { return c.clip_id == o.clip_id; });
    if (it == manifest.clips.end()) fail(ErrorKind::kConfig, "predict: no clip `" + o.clip_id + "` in manifest");
    clip = *it;
    frame_size = manifest.frame_size;
    frames = pose::load_clip_frames(manifest, clip);
  } else if (o.keypoints) {
    if (o.frame_width <= 0 || o.frame_height <= 0) {
      fail(ErrorKind::kConfig, "predict: --frame-width and --frame-height are required with --keypoints");
    }
    frame_size = {o.frame_width, o.frame_height};
    frames = pose::read_keypoint_source(*o.keypoints);
    clip.clip_id = o.clip_id.empty() ? o.keypoints->stem().string() : o.clip_id;
    clip.start_frame = frames.empty() ? 0 : frames.front().frame_index;
    clip.end_frame = frames.empty() ? 0 : frames.back().frame_index;
  } else {
    fail(ErrorKind::kConfig, "predict: give --manifest with --clip, or --keypoints");
  }

  std::vector<pose::HeadPose> heads;
  for (const auto& f : frames) heads.push_back(pose::filter_head(f, threshold));
  const pose::WindowSampling s = pose::sample_windows(clip, frame_size, heads, window);
  if (s.windows.empty()) io.err << "warning: clip " << clip.clip_id << " yields no windows\n";
  for (const pose::KeypointSequence& w : s.windows) {
    const double p = model.predict(pose::rasterize(w, raster));
    const ordered_json line = {{"clip_id", w.clip_id},
                               {"origin_frame", w.origin_frame},
                               {"probability", p},
                               {"predicted", nn::classify(p) ? 1 : 0}};
    io.out << line.dump() << "\n";
  }
}

}  // namespace stimkit::cli
