// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stimkit/augment/augment.hpp"
#include "stimkit/eval/folds.hpp"
#include "stimkit/eval/metrics.hpp"
#include "stimkit/nn/checkpoint.hpp"
#include "stimkit/nn/model.hpp"
#include "stimkit/nn/train.hpp"
#include "stimkit/pose/manifest.hpp"
#include "stimkit/pose/raster.hpp"

namespace stimkit::eval {

struct ClipSummary {
  pose::ClipRecord clip;
  std::size_t windows = 0;
  int dropped_invalid = 0;
  bool too_short = false;
};

/// Head-keypoint windows of every clip in a manifest.
struct WindowDataset {
  std::vector<ClipSummary> clips;
  std::vector<pose::KeypointSequence> windows;  // in clip order, then start frame
  std::vector<std::size_t> window_clip;         // index into `clips`
};

WindowDataset load_dataset(const pose::Manifest& manifest, const pose::WindowParams& params,
                           double confidence_threshold);

struct CvOptions {
  std::size_t folds = 3;
  std::uint64_t seed = 0;
  nn::ModelConfig model;
  nn::TrainConfig train;
  std::optional<augment::AugmentSpec> augment;  // none: train on raw windows
  pose::RasterSpec raster;
  pose::WindowParams window;
  double confidence_threshold = 0.1;
};

struct WindowPrediction {
  std::size_t fold = 0;
  std::string clip_id;
  std::string subject_id;
  int origin_frame = 0;
  pose::Label label = pose::Label::kUnset;
  double probability = 0.0;
};

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> test_subjects;
  std::size_t train_windows = 0;
  std::size_t test_windows = 0;
  ConfusionMatrix confusion;
  Metrics metrics;
  ConfusionMatrix clip_confusion;  // majority vote over each clip's windows
  Metrics clip_metrics;
  std::vector<double> loss_history;
  nn::ModelCheckpoint checkpoint;
};

struct CvReport {
  std::size_t folds = 0;
  std::uint64_t seed = 0;
  std::string fingerprint;  // FNV-1a of the canonical options JSON, hex
  nlohmann::ordered_json options;
  std::vector<FoldResult> per_fold;
  double mean_f1 = 0.0;
  double clip_mean_f1 = 0.0;
  std::vector<WindowPrediction> predictions;
  std::vector<std::string> warnings;

  /// Recomputes mean_f1 and clip_mean_f1 from per_fold.
  void aggregate();
};

using ProgressFn = std::function<void(const std::string&)>;

/// Trains one model per fold on the other folds' windows (augmented when
/// options.augment is set, redrawn every epoch) and evaluates the raw
/// held-out windows. Errors from a fold are rethrown with its index.
CvReport cross_validate(const WindowDataset& data, const CvOptions& options,
                        const ProgressFn& progress = {});

nlohmann::ordered_json options_to_json(const CvOptions& options);
nlohmann::ordered_json augment_to_json(const augment::AugmentSpec& spec);
nlohmann::ordered_json raster_to_json(const pose::RasterSpec& spec);
nlohmann::ordered_json window_to_json(const pose::WindowParams& params);
nlohmann::ordered_json train_to_json(const nn::TrainConfig& config);
std::string fingerprint(const nlohmann::ordered_json& options);

nlohmann::ordered_json report_to_json(const CvReport& report);
/// fold,clip_id,subject_id,origin_frame,label,probability,predicted
std::string predictions_csv(const CvReport& report);

/// Rasterizes one window, optionally augmenting it with a generator seeded
/// from `draw_seed`.
pose::RasterClip make_input(const pose::KeypointSequence& window, const pose::RasterSpec& raster,
                            const augment::AugmentSpec* augment, std::uint64_t draw_seed);

}  // namespace stimkit::eval
