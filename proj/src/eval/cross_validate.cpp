// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/eval/cross_validate.hpp"

#include <charconv>
#include <cstdio>
#include <map>
#include <set>

#include "stimkit/error.hpp"
#include "stimkit/pose/features.hpp"
#include "stimkit/rng.hpp"

namespace stimkit::eval {

using nlohmann::ordered_json;

WindowDataset load_dataset(const pose::Manifest& manifest, const pose::WindowParams& params,
                           double confidence_threshold) {
  WindowDataset data;
  for (const pose::ClipRecord& clip : manifest.clips) {
    const std::vector<pose::PoseFrame> frames = pose::load_clip_frames(manifest, clip);
    std::vector<pose::HeadPose> heads;
    heads.reserve(frames.size());
    for (const auto& f : frames) heads.push_back(pose::filter_head(f, confidence_threshold));
    pose::WindowSampling s = pose::sample_windows(clip, manifest.frame_size, heads, params);
    ClipSummary summary{clip, s.windows.size(), s.dropped_invalid, s.clip_too_short};
    for (auto& w : s.windows) {
      data.windows.push_back(std::move(w));
      data.window_clip.push_back(data.clips.size());
    }
    data.clips.push_back(std::move(summary));
  }
  return data;
}

pose::RasterClip make_input(const pose::KeypointSequence& window, const pose::RasterSpec& raster,
                            const augment::AugmentSpec* spec, std::uint64_t draw_seed) {
  if (spec == nullptr) return pose::rasterize(window, raster);
  Rng rng(derive_seed(draw_seed, spec->seed));
  return pose::rasterize(augment::apply_augmentation(window, *spec, rng), raster);
}

ordered_json augment_to_json(const augment::AugmentSpec& s) {
  return {{"rotation_range", {s.rotation_min_deg, s.rotation_max_deg}},
          {"zoom_range", {s.zoom_min, s.zoom_max}},
          {"mode", s.mode == augment::DrawMode::kPerClip ? "per_clip" : "per_frame"},
          {"seed", s.seed}};
}

ordered_json raster_to_json(const pose::RasterSpec& s) {
  return {{"width", s.width},
          {"height", s.height},
          {"point_radius", s.point_radius},
          {"line_thickness", s.line_thickness},
          {"center", s.center_mode == pose::CenterMode::kSequenceMean ? "sequence_mean" : "none"}};
}

ordered_json window_to_json(const pose::WindowParams& p) {
  return {{"length", p.length}, {"stride", p.stride}, {"hop", p.hop}};
}

ordered_json train_to_json(const nn::TrainConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"beta1", c.beta1},     {"beta2", c.beta2},
          {"epsilon", c.epsilon},             {"batch_size", c.batch_size}, {"epochs", c.epochs}};
}

ordered_json options_to_json(const CvOptions& o) {
  ordered_json model = nn::model_config_to_json(o.model);
  model.erase("seed");
  return {{"folds", o.folds},
          {"seed", o.seed},
          {"model", model},
          {"train", train_to_json(o.train)},
          {"augment", o.augment ? augment_to_json(*o.augment) : ordered_json()},
          {"raster", raster_to_json(o.raster)},
          {"window", window_to_json(o.window)},
          {"confidence_threshold", o.confidence_threshold}};
}

std::string fingerprint(const ordered_json& options) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(options.dump())));
  return buf;
}

void CvReport::aggregate() {
  std::vector<double> window_f1, clip_f1;
  for (const FoldResult& f : per_fold) {
    window_f1.push_back(f.metrics.f1);
    clip_f1.push_back(f.clip_metrics.f1);
  }
  mean_f1 = eval::mean_f1(window_f1);
  clip_mean_f1 = eval::mean_f1(clip_f1);
}

namespace {

ConfusionMatrix clip_vote(const std::vector<WindowPrediction>& preds) {
  struct Votes {
    std::size_t positive = 0;
    std::size_t total = 0;
    pose::Label label = pose::Label::kUnset;
  };
  std::map<std::string, Votes> clips;
  for (const auto& p : preds) {
    Votes& v = clips[p.clip_id];
    v.label = p.label;
    ++v.total;
    if (nn::classify(p.probability)) ++v.positive;
  }
  std::vector<double> probs;
  std::vector<pose::Label> labels;
  for (const auto& [id, v] : clips) {
    // Strict majority; a tied vote counts as negative like p == 0.5.
    probs.push_back(2 * v.positive > v.total ? 1.0 : 0.0);
    labels.push_back(v.label);
  }
  return confusion(probs, labels);
}

}  // namespace

CvReport cross_validate(const WindowDataset& data, const CvOptions& input_options,
                        const ProgressFn& progress) {
  CvOptions options = input_options;
  options.model.validate();
  options.train.validate();
  options.raster.validate();
  if (options.augment) options.augment->validate();
  if (static_cast<std::size_t>(options.raster.height) != options.model.height ||
      static_cast<std::size_t>(options.raster.width) != options.model.width ||
      static_cast<std::size_t>(options.window.length) != options.model.length) {
    fail(ErrorKind::kConfig, "raster size and window length must match the model input");
  }
  if (data.windows.empty()) fail(ErrorKind::kConfig, "dataset has no usable windows");

  std::vector<pose::ClipRecord> records;
  std::vector<std::size_t> counts;
  for (const auto& c : data.clips) {
    records.push_back(c.clip);
    counts.push_back(c.windows);
  }
  const FoldPlan plan = subject_disjoint_folds(records, counts, options.folds, options.seed);

  CvReport report;
  report.folds = options.folds;
  report.seed = options.seed;
  report.options = options_to_json(options);
  report.fingerprint = fingerprint(report.options);
  report.warnings = plan.warnings;
  for (const auto& c : data.clips) {
    if (c.too_short) report.warnings.push_back("clip " + c.clip.clip_id + " is shorter than one window");
    if (c.dropped_invalid > 0) {
      report.warnings.push_back("clip " + c.clip.clip_id + ": " + std::to_string(c.dropped_invalid) +
                                " window(s) dropped for too few valid frames");
    }
  }

  std::vector<std::size_t> window_fold(data.windows.size());
  for (std::size_t i = 0; i < data.windows.size(); ++i) {
    window_fold[i] = plan.fold_of(data.windows[i].subject_id);
  }
  const augment::AugmentSpec* aug = options.augment ? &*options.augment : nullptr;
  ordered_json preprocess = {{"raster", raster_to_json(options.raster)},
                             {"window", window_to_json(options.window)},
                             {"confidence_threshold", options.confidence_threshold}};

  for (std::size_t fold = 0; fold < options.folds; ++fold) {
    FoldResult result;
    result.fold = fold;
    result.test_subjects = plan.subjects_in(fold);
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < data.windows.size(); ++i) {
      (window_fold[i] == fold ? test_idx : train_idx).push_back(i);
    }
    // Exact set check: no subject on both sides.
    std::set<std::string> train_subjects;
    for (std::size_t i : train_idx) train_subjects.insert(data.windows[i].subject_id);
    for (std::size_t i : test_idx) {
      if (train_subjects.count(data.windows[i].subject_id)) {
        fail(ErrorKind::kConfig, "fold " + std::to_string(fold) + " leaks subject " +
                                     data.windows[i].subject_id);
      }
    }
    result.train_windows = train_idx.size();
    result.test_windows = test_idx.size();
    if (progress) {
      progress("fold " + std::to_string(fold) + ": training on " + std::to_string(train_idx.size()) +
               " windows, testing on " + std::to_string(test_idx.size()));
    }

    nn::ModelConfig model_config = options.model;
    model_config.seed = derive_seed(options.seed, "fold" + std::to_string(fold) + ".init");
    nn::TrainConfig train_config = options.train;
    train_config.seed = derive_seed(options.seed, "fold" + std::to_string(fold) + ".train");

    std::vector<pose::Label> labels;
    for (std::size_t i : train_idx) labels.push_back(data.windows[i].label);
    nn::TrainResult trained = [&] {
      try {
        return nn::train(
            model_config, labels,
            [&](std::size_t i, std::uint64_t draw_seed) {
              return make_input(data.windows[train_idx[i]], options.raster, aug, draw_seed);
            },
            train_config);
      } catch (const Error& e) {
        fail(e.kind(), "fold " + std::to_string(fold) + ": " + e.what());
      }
    }();
    result.loss_history = trained.history;

    std::vector<double> probs;
    std::vector<pose::Label> test_labels;
    std::vector<WindowPrediction> fold_preds;
    nn::Workspace<float> ws;
    for (std::size_t i : test_idx) {
      const pose::KeypointSequence& w = data.windows[i];
      const double p = trained.model.forward(pose::rasterize(w, options.raster), ws);
      probs.push_back(p);
      test_labels.push_back(w.label);
      fold_preds.push_back({fold, w.clip_id, w.subject_id, w.origin_frame, w.label, p});
    }
    result.confusion = confusion(probs, test_labels);
    result.metrics = precision_recall_f1(result.confusion);
    result.clip_confusion = clip_vote(fold_preds);
    result.clip_metrics = precision_recall_f1(result.clip_confusion);
    if (result.metrics.degenerate) {
      report.warnings.push_back("fold " + std::to_string(fold) + ": degenerate window metrics (0/0 reported as 0)");
    }

    nn::TrainingMetadata meta{trained.history.size(),
                              trained.history.empty() ? 0.0 : trained.history.back(),
                              train_config.seed};
    result.checkpoint = nn::ModelCheckpoint::from_model(trained.model, meta);
    result.checkpoint.preprocess = nlohmann::json::parse(preprocess.dump());
    report.predictions.insert(report.predictions.end(), fold_preds.begin(), fold_preds.end());
    if (progress) {
      char line[160];
      std::snprintf(line, sizeof line, "fold %zu: F1 %.4f (P %.4f, R %.4f), clip F1 %.4f", fold,
                    result.metrics.f1, result.metrics.precision, result.metrics.recall,
                    result.clip_metrics.f1);
      progress(line);
    }
    report.per_fold.push_back(std::move(result));
  }
  report.aggregate();
  return report;
}

namespace {

ordered_json confusion_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
}

ordered_json metrics_json(const ConfusionMatrix& cm, const Metrics& m) {
  return {{"confusion", confusion_json(cm)},
          {"precision", m.precision},
          {"recall", m.recall},
          {"f1", m.f1},
          {"degenerate", m.degenerate}};
}

}  // namespace

ordered_json report_to_json(const CvReport& r) {
  ordered_json folds = ordered_json::array();
  for (const FoldResult& f : r.per_fold) {
    ordered_json window = metrics_json(f.confusion, f.metrics);
    folds.push_back({{"fold", f.fold},
                     {"test_subjects", f.test_subjects},
                     {"train_windows", f.train_windows},
                     {"test_windows", f.test_windows},
                     {"window", window},
                     {"clip", metrics_json(f.clip_confusion, f.clip_metrics)},
                     {"final_loss", f.loss_history.empty() ? 0.0 : f.loss_history.back()},
                     {"loss_history", f.loss_history}});
  }
  return {{"format_version", 1},
          {"fingerprint", r.fingerprint},
          {"seed", r.seed},
          {"folds", r.folds},
          {"mean_f1", r.mean_f1},
          {"clip_mean_f1", r.clip_mean_f1},
          {"per_fold", folds},
          {"options", r.options},
          {"warnings", r.warnings}};
}

std::string predictions_csv(const CvReport& r) {
  std::string out = "fold,clip_id,subject_id,origin_frame,label,probability,predicted\n";
  for (const WindowPrediction& p : r.predictions) {
    char prob[32];
    const auto res = std::to_chars(prob, prob + sizeof prob, p.probability);
    out += std::to_string(p.fold) + "," + p.clip_id + "," + p.subject_id + "," +
           std::to_string(p.origin_frame) + "," + std::string(pose::to_string(p.label)) + "," +
           std::string(prob, res.ptr) + "," + (nn::classify(p.probability) ? "1" : "0") + "\n";
  }
  return out;
}

}  // namespace stimkit::eval
