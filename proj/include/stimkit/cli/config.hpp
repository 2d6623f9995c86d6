// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "stimkit/augment/augment.hpp"
#include "stimkit/eval/cross_validate.hpp"
#include "stimkit/nn/model.hpp"
#include "stimkit/nn/train.hpp"
#include "stimkit/pose/raster.hpp"
#include "stimkit/pose/types.hpp"
#include "stimkit/synth/synthgen.hpp"

namespace stimkit::cli {

/// Everything a run needs. Model input size follows window.length and the
/// raster size; every stream seed derives from `seed`.
struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path dataset;     // manifest
  std::filesystem::path output_dir;  // default "out"
  std::size_t folds = 3;
  double confidence_threshold = 0.1;
  pose::WindowParams window;
  pose::RasterSpec raster;
  nn::ModelConfig model;
  nn::TrainConfig train;
  std::optional<augment::AugmentSpec> augment = augment::AugmentSpec{};
  std::vector<std::string> holdout_subjects;  // train: evaluated, not fitted
  synth::SynthConfig synth;
};

/// Parses and validates. Relative paths resolve against `base_dir`. Errors
/// are kConfig (or kRange from nested validators) and start with the field
/// path, e.g. `augment.zoom_range: ...`. Unknown keys are rejected.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);

/// Applies `path=value` where path is dotted (`train.epochs`) and value is
/// JSON, or a bare string when it does not parse as JSON.
void apply_override(nlohmann::json& doc, std::string_view assignment);

/// Reads the file (an absent path gives an empty object), applies the
/// overrides in order and parses.
RunConfig load_run_config(const std::optional<std::filesystem::path>& path,
                          const std::vector<std::string>& overrides);

/// Options for cross_validate; the seed is the run seed.
eval::CvOptions cv_options(const RunConfig& config);

/// Fully populated config as JSON, paths as given.
nlohmann::ordered_json run_config_to_json(const RunConfig& config);

}  // namespace stimkit::cli
