// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "stimkit/nn/model.hpp"
#include "stimkit/nn/tensor.hpp"

namespace stimkit::nn {

inline constexpr std::string_view kCheckpointMagic = "STIMKIT1";
inline constexpr int kCheckpointVersion = 1;

struct TrainingMetadata {
  std::size_t epochs_run = 0;
  double final_loss = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

/// Layout on disk:
///   8 bytes   "STIMKIT1"
///   8 bytes   header length N, little-endian uint64
///   N bytes   UTF-8 JSON header (config, parameter table, metadata)
///   rest      parameters as little-endian IEEE-754 float32, in table order
/// Table offsets count bytes from the start of the payload.
struct ModelCheckpoint {
  int format_version = kCheckpointVersion;
  ModelConfig config;
  std::vector<std::pair<std::string, Tensor<float>>> parameters;
  TrainingMetadata training;
  nlohmann::json preprocess;  // raster/window settings used to build inputs; may be null

  static ModelCheckpoint from_model(const Model<float>& model, TrainingMetadata training = {});
  Model<float> to_model() const;

  friend bool operator==(const ModelCheckpoint&, const ModelCheckpoint&) = default;
};

std::string serialize_checkpoint(const ModelCheckpoint& checkpoint);
ModelCheckpoint parse_checkpoint(std::string_view bytes, const std::string& source = "checkpoint");

void save_checkpoint(const ModelCheckpoint& checkpoint, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

nlohmann::json model_config_to_json(const ModelConfig& config);
/// `where` prefixes error messages, e.g. "model".
ModelConfig model_config_from_json(const nlohmann::json& j, const std::string& where);

/// Writes bytes to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace stimkit::nn
