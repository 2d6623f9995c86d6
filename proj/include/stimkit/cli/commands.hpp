// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "stimkit/cli/config.hpp"
#include "stimkit/error.hpp"

namespace stimkit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitIo = 4;

int exit_code(ErrorKind kind);

/// Console streams for a command; progress and warnings go to `err`.
struct Io {
  std::ostream& out;
  std::ostream& err;
};

struct ImportOptions {
  std::filesystem::path openpose_dir;  // one subdirectory per clip
  std::filesystem::path manifest_out;
  int frame_width = 0;
  int frame_height = 0;
  double fps = 30.0;
};

/// Consolidates every clip directory into <manifest dir>/keypoints/<clip>.json
/// and writes a manifest whose subject and label fields are UNSET.
void cmd_import(const ImportOptions& options, Io io);

enum class FlowMethod { kLucasKanade, kDense };

struct FlowvizOptions {
  std::vector<std::filesystem::path> frames;
  FlowMethod method = FlowMethod::kDense;
  std::filesystem::path out_dir;
  bool png = true;          // falls back to PPM when PNG support is missing
  bool isolation = false;   // lk: black background
  bool dump_json = false;   // flow_NNNN.json next to each image
  int spacing = 10;
  double arrow_scale = 3.0;
};

/// One rendering per consecutive pair: flow_0000.png, flow_0001.png, ...
/// Returns the written image paths.
std::vector<std::filesystem::path> cmd_flowviz(const FlowvizOptions& options, Io io);

/// Writes the synthetic dataset to `out_dir` (or config.output_dir).
std::filesystem::path cmd_synth(const RunConfig& config, Io io);

/// Fits one model on the dataset minus config.holdout_subjects, writes
/// model.ckpt and history.json to config.output_dir.
void cmd_train(const RunConfig& config, Io io);

/// Writes cv_report.json, predictions.csv and fold<i>.ckpt to
/// config.output_dir and prints the fold table.
eval::CvReport cmd_cv(const RunConfig& config, Io io);

struct PredictOptions {
  std::filesystem::path checkpoint;
  // Either a manifest and a clip id, or a bare keypoint file plus frame size.
  std::optional<std::filesystem::path> manifest;
  std::string clip_id;
  std::optional<std::filesystem::path> keypoints;
  int frame_width = 0;
  int frame_height = 0;
  std::optional<pose::WindowParams> window;  // default: the checkpoint's
};

/// One JSON object per window on `out`:
/// {"clip_id","origin_frame","probability","predicted"}.
void cmd_predict(const PredictOptions& options, Io io);

}  // namespace stimkit::cli
