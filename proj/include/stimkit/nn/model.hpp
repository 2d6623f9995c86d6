// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stimkit/nn/layers.hpp"
#include "stimkit/nn/tensor.hpp"
#include "stimkit/pose/raster.hpp"

namespace stimkit::nn {

struct ConvBlock {
  std::size_t filters = 16;
  std::size_t kernel = 3;
  std::size_t pool = 2;

  friend bool operator==(const ConvBlock&, const ConvBlock&) = default;
};

/// Time-distributed CNN -> LSTM -> sigmoid. The frame CNN is
/// [conv(k, same) -> ReLU -> maxpool2] per block, then flatten -> dense
/// embedding with ReLU.
struct ModelConfig {
  std::size_t length = 7;
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t channels = 1;
  std::vector<ConvBlock> conv_blocks = {{16, 3, 2}, {32, 3, 2}};
  std::size_t frame_embedding = 64;
  std::size_t lstm_hidden = 32;
  std::uint64_t seed = 0;

  void validate() const;
  std::size_t flat_features() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct ParamSlot {
  std::string name;
  Shape shape;
  std::size_t offset = 0;
  std::size_t count = 0;
};

/// Parameter layout in storage order. Depends only on the frame CNN,
/// embedding and LSTM sizes, not on the sequence length.
std::vector<ParamSlot> parameter_layout(const ModelConfig& config);

/// Per-sample activations kept for the backward pass.
template <typename T>
struct Workspace {
  struct Frame {
    std::vector<std::vector<T>> block_input;   // input to each conv block
    std::vector<std::vector<T>> conv_out;      // post-ReLU conv output
    std::vector<std::vector<std::uint32_t>> argmax;
  };
  std::vector<Frame> frames;
  std::vector<T> flat;       // [T, flat_features]
  std::vector<T> embedding;  // [T, frame_embedding], post-ReLU
  std::vector<LstmStepCache<T>> lstm;
  T logit = T(0);
  T probability = T(0);

  // Hash of every ReLU mask and pooling argmax; changes when a
  // perturbation crosses a kink.
  std::uint64_t activation_pattern() const;
};

template <typename T>
class Model {
 public:
  explicit Model(ModelConfig config);

  /// Glorot-uniform weights, zero biases, forget-gate bias 1.
  void initialize(std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  const std::vector<ParamSlot>& layout() const { return layout_; }
  std::span<T> parameters() { return params_; }
  std::span<const T> parameters() const { return params_; }
  std::span<T> parameter(std::string_view name);
  std::span<const T> parameter(std::string_view name) const;

  /// Returns p in (0, 1) and fills the workspace.
  T forward(const pose::RasterClip& clip, Workspace<T>& ws) const;
  T forward(std::span<const T> frames, Workspace<T>& ws) const;
  T predict(const pose::RasterClip& clip) const;

  /// Accumulates dL/dparams into grads given dL/dlogit.
  void backward(const Workspace<T>& ws, T d_logit, std::span<T> grads) const;

 private:
  const ParamSlot& slot(std::string_view name) const;

  ModelConfig config_;
  std::vector<ParamSlot> layout_;
  std::vector<T> params_;
};

/// Clipped binary cross-entropy and its derivative w.r.t. p.
struct LossValue {
  double loss;
  double d_probability;
};

inline constexpr double kProbabilityClip = 1e-7;

LossValue bce_loss(double p, int label);

/// Threshold 0.5; p == 0.5 is negative.
inline bool classify(double p) { return p > 0.5; }

}  // namespace stimkit::nn
