// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "stimkit/nn/model.hpp"
#include "stimkit/pose/raster.hpp"

namespace stimkit::nn {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t batch_size = 8;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;
  std::size_t threads = 0;  // 0: STIMKIT_THREADS or hardware concurrency

  void validate() const;

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

template <typename T>
struct AdamState {
  std::vector<T> m;
  std::vector<T> v;
  std::uint64_t step = 0;

  explicit AdamState(std::size_t n = 0) : m(n, T(0)), v(n, T(0)) {}
};

/// One bias-corrected Adam update; advances state.step first, so the first
/// call uses t = 1.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               const TrainConfig& config);

/// Produces training sample `index`; `draw_seed` is fresh for every
/// (epoch, index) pair so augmentation can redraw deterministically.
using ClipProvider = std::function<pose::RasterClip(std::size_t index, std::uint64_t draw_seed)>;

struct TrainResult {
  Model<float> model;
  std::vector<double> history;  // mean loss per epoch
};

/// Mini-batch Adam on mean binary cross-entropy. Per-sample gradients are
/// reduced in batch order, so results do not depend on the thread count.
TrainResult train(const ModelConfig& model_config, std::span<const pose::Label> labels,
                  const ClipProvider& provider, const TrainConfig& train_config);

TrainResult train(const ModelConfig& model_config, std::span<const pose::RasterClip> clips,
                  const TrainConfig& train_config);

/// Worker count: explicit request, else STIMKIT_THREADS, else hardware
/// concurrency; always >= 1.
std::size_t resolve_threads(std::size_t requested);

}  // namespace stimkit::nn
