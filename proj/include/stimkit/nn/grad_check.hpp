// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "stimkit/nn/model.hpp"
#include "stimkit/pose/raster.hpp"

namespace stimkit::nn {

/// Worst |g_a - g_n| / max(|g_a|, |g_n|, 1e-8) over all checked
/// coordinates. Coordinates whose +-epsilon probe flips a ReLU mask or a
/// pooling argmax are skipped and counted.
struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst;  // "<parameter>[<index>]"
  std::size_t checked = 0;
  std::size_t skipped_kinks = 0;
};

struct GradCheckOptions {
  double epsilon = 1e-3;
  double conv_grad_scale = 1.0;  // != 1 corrupts conv kernel gradients (harness self-test)
};

/// Small end-to-end configuration: T=2, 8x8, one block of 4 filters, LSTM 4.
ModelConfig micro_config(std::uint64_t seed = 1);

/// Random sample matching `config`, pixels in {0, 1}.
pose::RasterClip random_sample(const ModelConfig& config, std::uint64_t seed, pose::Label label);

/// End-to-end check of the loss BCE(sigmoid(logit), label) w.r.t. every
/// parameter, in double precision. Parameters start from `config.seed`.
GradCheckReport grad_check(const ModelConfig& config, const pose::RasterClip& sample,
                           const GradCheckOptions& options = {});

/// Same, with explicit parameter values (size must match the layout).
GradCheckReport grad_check(const Model<double>& model, const pose::RasterClip& sample,
                           const GradCheckOptions& options = {});

/// Per-operation checks on random inputs against a random linear readout.
/// Each covers inputs and parameters.
GradCheckReport check_conv2d(std::uint64_t seed, double epsilon = 1e-3);
GradCheckReport check_maxpool2(std::uint64_t seed, double epsilon = 1e-3);
GradCheckReport check_dense(std::uint64_t seed, Activation activation, double epsilon = 1e-3);
GradCheckReport check_lstm(std::uint64_t seed, std::size_t steps = 3, double epsilon = 1e-3);

}  // namespace stimkit::nn
