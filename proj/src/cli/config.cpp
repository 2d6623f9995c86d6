// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/cli/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "stimkit/error.hpp"
#include "stimkit/rng.hpp"

namespace stimkit::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string join(const std::string& where, std::string_view key) {
  return where.empty() ? std::string(key) : where + "." + std::string(key);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<std::string_view> keys) {
  if (!obj.is_object()) fail(ErrorKind::kConfig, (where.empty() ? "config" : where) + ": expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (std::string_view k : keys) known = known || item.key() == k;
    if (!known) fail(ErrorKind::kConfig, join(where, item.key()) + ": unknown field");
  }
}

double number(const json& obj, std::string_view key, const std::string& where, double fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_number()) fail(ErrorKind::kConfig, join(where, key) + ": expected a number");
  return it->get<double>();
}

bool non_negative_integer(const json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

std::uint64_t count(const json& obj, std::string_view key, const std::string& where, std::uint64_t fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!non_negative_integer(*it)) fail(ErrorKind::kConfig, join(where, key) + ": expected a non-negative integer");
  return it->get<std::uint64_t>();
}

int small_int(const json& obj, std::string_view key, const std::string& where, int fallback) {
  const std::uint64_t v = count(obj, key, where, static_cast<std::uint64_t>(fallback));
  if (v > 1000000) fail(ErrorKind::kConfig, join(where, key) + ": value too large");
  return static_cast<int>(v);
}

std::string text(const json& obj, std::string_view key, const std::string& where, std::string fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_string()) fail(ErrorKind::kConfig, join(where, key) + ": expected a string");
  return it->get<std::string>();
}

std::pair<double, double> range(const json& obj, std::string_view key, const std::string& where,
                                std::pair<double, double> fallback) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  if (!it->is_array() || it->size() != 2 || !(*it)[0].is_number() || !(*it)[1].is_number()) {
    fail(ErrorKind::kConfig, join(where, key) + ": expected [min, max]");
  }
  return {(*it)[0].get<double>(), (*it)[1].get<double>()};
}

const json& section(const json& doc, std::string_view key) {
  static const json empty = json::object();
  const auto it = doc.find(key);
  return it == doc.end() ? empty : *it;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  if (p.empty()) return {};
  std::filesystem::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

}  // namespace

RunConfig parse_run_config(const json& doc, const std::filesystem::path& base_dir) {
  only_keys(doc, "", {"seed", "dataset", "output_dir", "folds", "confidence_threshold", "window", "raster",
                      "model", "train", "augment", "holdout_subjects", "synth"});
  RunConfig c;
  const auto seed = doc.find("seed");
  if (seed == doc.end()) fail(ErrorKind::kConfig, "seed: required (no wall-clock seeding)");
  if (!non_negative_integer(*seed)) fail(ErrorKind::kConfig, "seed: expected a non-negative integer");
  c.seed = seed->get<std::uint64_t>();
  c.dataset = resolve(base_dir, text(doc, "dataset", "", ""));
  c.output_dir = resolve(base_dir, text(doc, "output_dir", "", "out"));
  c.folds = count(doc, "folds", "", 3);
  if (c.folds < 2) fail(ErrorKind::kConfig, "folds: must be >= 2");
  c.confidence_threshold = number(doc, "confidence_threshold", "", 0.1);
  if (!(c.confidence_threshold >= 0.0 && c.confidence_threshold <= 1.0)) {
    fail(ErrorKind::kConfig, "confidence_threshold: must be in [0, 1]");
  }

  const json& w = section(doc, "window");
  only_keys(w, "window", {"length", "stride", "hop"});
  c.window.length = small_int(w, "length", "window", 7);
  c.window.stride = small_int(w, "stride", "window", 5);
  c.window.hop = small_int(w, "hop", "window", 15);
  if (c.window.length < 2) fail(ErrorKind::kConfig, "window.length: must be >= 2");
  if (c.window.stride < 1) fail(ErrorKind::kConfig, "window.stride: must be >= 1");
  if (c.window.hop < 1) fail(ErrorKind::kConfig, "window.hop: must be >= 1");

  const json& r = section(doc, "raster");
  only_keys(r, "raster", {"width", "height", "point_radius", "line_thickness", "center"});
  c.raster.width = small_int(r, "width", "raster", 64);
  c.raster.height = small_int(r, "height", "raster", 64);
  c.raster.point_radius = number(r, "point_radius", "raster", 2.0);
  c.raster.line_thickness = number(r, "line_thickness", "raster", 1.0);
  const std::string center = text(r, "center", "raster", "sequence_mean");
  if (center == "sequence_mean") {
    c.raster.center_mode = pose::CenterMode::kSequenceMean;
  } else if (center == "none") {
    c.raster.center_mode = pose::CenterMode::kNone;
  } else {
    fail(ErrorKind::kConfig, "raster.center: expected \"sequence_mean\" or \"none\"");
  }
  c.raster.validate();

  const json& m = section(doc, "model");
  only_keys(m, "model", {"conv_blocks", "frame_embedding", "lstm_hidden"});
  c.model = nn::model_config_from_json(m, "model");
  c.model.length = static_cast<std::size_t>(c.window.length);
  c.model.height = static_cast<std::size_t>(c.raster.height);
  c.model.width = static_cast<std::size_t>(c.raster.width);
  c.model.seed = derive_seed(c.seed, "model");
  c.model.validate();

  const json& t = section(doc, "train");
  only_keys(t, "train", {"learning_rate", "beta1", "beta2", "epsilon", "batch_size", "epochs", "threads"});
  c.train.learning_rate = number(t, "learning_rate", "train", 1e-4);
  c.train.beta1 = number(t, "beta1", "train", 0.9);
  c.train.beta2 = number(t, "beta2", "train", 0.999);
  c.train.epsilon = number(t, "epsilon", "train", 1e-8);
  c.train.batch_size = count(t, "batch_size", "train", 8);
  c.train.epochs = count(t, "epochs", "train", 50);
  c.train.threads = count(t, "threads", "train", 0);
  c.train.seed = derive_seed(c.seed, "train");
  c.train.validate();

  const auto aug = doc.find("augment");
  if (aug != doc.end() && aug->is_null()) {
    c.augment.reset();
  } else {
    const json& a = section(doc, "augment");
    only_keys(a, "augment", {"rotation_range", "zoom_range", "mode"});
    augment::AugmentSpec s;
    std::tie(s.rotation_min_deg, s.rotation_max_deg) =
        range(a, "rotation_range", "augment", {s.rotation_min_deg, s.rotation_max_deg});
    std::tie(s.zoom_min, s.zoom_max) = range(a, "zoom_range", "augment", {s.zoom_min, s.zoom_max});
    const std::string mode = text(a, "mode", "augment", "per_clip");
    if (mode == "per_clip") {
      s.mode = augment::DrawMode::kPerClip;
    } else if (mode == "per_frame") {
      s.mode = augment::DrawMode::kPerFrame;
    } else {
      fail(ErrorKind::kConfig, "augment.mode: expected \"per_clip\" or \"per_frame\"");
    }
    s.seed = derive_seed(c.seed, "augment");
    s.validate();
    c.augment = s;
  }

  const auto holdout = doc.find("holdout_subjects");
  if (holdout != doc.end()) {
    if (!holdout->is_array()) fail(ErrorKind::kConfig, "holdout_subjects: expected an array of strings");
    for (const json& s : *holdout) {
      if (!s.is_string()) fail(ErrorKind::kConfig, "holdout_subjects: expected an array of strings");
      c.holdout_subjects.push_back(s.get<std::string>());
    }
  }

  const json& s = section(doc, "synth");
  only_keys(s, "synth", {"subjects", "clips_per_subject", "frames_per_clip", "fps", "frame_width", "frame_height",
                         "camera_drift_sigma", "frequency_range", "amplitude_range"});
  synth::SynthConfig& sc = c.synth;
  sc.subjects = count(s, "subjects", "synth", sc.subjects);
  sc.clips_per_subject = count(s, "clips_per_subject", "synth", sc.clips_per_subject);
  sc.frames_per_clip = small_int(s, "frames_per_clip", "synth", sc.frames_per_clip);
  sc.fps = number(s, "fps", "synth", sc.fps);
  sc.frame.width = small_int(s, "frame_width", "synth", sc.frame.width);
  sc.frame.height = small_int(s, "frame_height", "synth", sc.frame.height);
  sc.camera_drift_sigma = number(s, "camera_drift_sigma", "synth", sc.camera_drift_sigma);
  std::tie(sc.frequency_min, sc.frequency_max) =
      range(s, "frequency_range", "synth", {sc.frequency_min, sc.frequency_max});
  std::tie(sc.amplitude_min, sc.amplitude_max) =
      range(s, "amplitude_range", "synth", {sc.amplitude_min, sc.amplitude_max});
  sc.seed = c.seed;
  sc.validate();
  return c;
}

void apply_override(json& doc, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    fail(ErrorKind::kConfig, "override `" + std::string(assignment) + "`: expected path=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) fail(ErrorKind::kConfig, "override `" + path + "`: empty path component");
    if (!node->is_object()) fail(ErrorKind::kConfig, "override `" + path + "`: parent is not an object");
    if (dot == std::string::npos) {
      (*node)[key] = std::move(value);
      return;
    }
    node = &(*node)[key];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides) {
  json doc = json::object();
  std::filesystem::path base;
  if (path) {
    std::ifstream in(*path, std::ios::binary);
    if (!in) fail(ErrorKind::kIo, "cannot read config " + path->string());
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      doc = json::parse(ss.str());
    } catch (const json::parse_error& e) {
      fail(ErrorKind::kConfig, path->string() + ": malformed JSON at byte " + std::to_string(e.byte));
    }
    base = path->parent_path();
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return parse_run_config(doc, base);
}

eval::CvOptions cv_options(const RunConfig& c) {
  eval::CvOptions o;
  o.folds = c.folds;
  o.seed = c.seed;
  o.model = c.model;
  o.train = c.train;
  o.augment = c.augment;
  o.raster = c.raster;
  o.window = c.window;
  o.confidence_threshold = c.confidence_threshold;
  return o;
}

ordered_json run_config_to_json(const RunConfig& c) {
  ordered_json model = nn::model_config_to_json(c.model);
  for (const char* k : {"length", "height", "width", "channels", "seed"}) model.erase(k);
  ordered_json train = eval::train_to_json(c.train);
  train["threads"] = c.train.threads;
  ordered_json aug;
  if (c.augment) {
    aug = eval::augment_to_json(*c.augment);
    aug.erase("seed");
  }
  const synth::SynthConfig& s = c.synth;
  return {{"seed", c.seed},
          {"dataset", c.dataset.string()},
          {"output_dir", c.output_dir.string()},
          {"folds", c.folds},
          {"confidence_threshold", c.confidence_threshold},
          {"window", eval::window_to_json(c.window)},
          {"raster", eval::raster_to_json(c.raster)},
          {"model", model},
          {"train", train},
          {"augment", aug},
          {"holdout_subjects", c.holdout_subjects},
          {"synth",
           {{"subjects", s.subjects},
            {"clips_per_subject", s.clips_per_subject},
            {"frames_per_clip", s.frames_per_clip},
            {"fps", s.fps},
            {"frame_width", s.frame.width},
            {"frame_height", s.frame.height},
            {"camera_drift_sigma", s.camera_drift_sigma},
            {"frequency_range", {s.frequency_min, s.frequency_max}},
            {"amplitude_range", {s.amplitude_min, s.amplitude_max}}}}};
}

}  // namespace stimkit::cli
