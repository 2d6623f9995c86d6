// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <string>
#include <thread>

#include "stimkit/error.hpp"
#include "stimkit/rng.hpp"
#include "stimkit/simd/kernels.hpp"

namespace stimkit::nn {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) fail(ErrorKind::kConfig, "train.learning_rate must be > 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) fail(ErrorKind::kConfig, "train.beta1 must be in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) fail(ErrorKind::kConfig, "train.beta2 must be in (0, 1)");
  if (!(epsilon > 0.0)) fail(ErrorKind::kConfig, "train.epsilon must be > 0");
  if (batch_size < 1) fail(ErrorKind::kConfig, "train.batch_size must be >= 1");
}

template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state,
               const TrainConfig& config) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    fail(ErrorKind::kShape, "adam_step: parameter, gradient and state sizes differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const simd::AdamCoefficients<T> coeff{
      static_cast<T>(config.learning_rate),
      static_cast<T>(config.beta1),
      static_cast<T>(config.beta2),
      static_cast<T>(config.epsilon),
      static_cast<T>(1.0 - std::pow(config.beta1, t)),
      static_cast<T>(1.0 - std::pow(config.beta2, t)),
  };
  simd::kernels<T>().adam(params.data(), grads.data(), state.m.data(), state.v.data(),
                          params.size(), coeff);
}

template void adam_step<float>(std::span<float>, std::span<const float>, AdamState<float>&,
                               const TrainConfig&);
template void adam_step<double>(std::span<double>, std::span<const double>, AdamState<double>&,
                                const TrainConfig&);

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("STIMKIT_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

int label_value(pose::Label label) {
  switch (label) {
    case pose::Label::kPositive: return 1;
    case pose::Label::kNegative: return 0;
    case pose::Label::kUnset: break;
  }
  fail(ErrorKind::kConfig, "training sample without a label");
}

template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

TrainResult train(const ModelConfig& model_config, std::span<const pose::Label> labels,
                  const ClipProvider& provider, const TrainConfig& config) {
  model_config.validate();
  config.validate();
  if (labels.empty()) fail(ErrorKind::kConfig, "training set is empty");
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = label_value(labels[i]);
  const auto positives = std::count(y.begin(), y.end(), 1);
  if (positives == 0 || positives == static_cast<std::ptrdiff_t>(y.size())) {
    fail(ErrorKind::kConfig, "training set must contain both labels");
  }

  TrainResult result{Model<float>(model_config), {}};
  Model<float>& model = result.model;
  model.initialize(model_config.seed);
  const std::size_t n_params = model.parameters().size();
  AdamState<float> adam(n_params);
  const std::size_t threads = resolve_threads(config.threads);
  const std::size_t batch = config.batch_size;

  std::vector<std::size_t> order(y.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::vector<float>> sample_grads(std::min(batch, y.size()), std::vector<float>(n_params));
  std::vector<double> sample_loss(sample_grads.size());
  std::vector<float> batch_grad(n_params);
  const auto& kern = simd::kernels<float>();

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    Rng shuffle_rng(derive_seed(config.seed, 2 * epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    const std::uint64_t draw_base = derive_seed(config.seed, 2 * epoch + 1);
    double epoch_loss = 0.0;

    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t b = std::min(batch, order.size() - start);
      parallel_for(b, threads, [&](std::size_t i) {
        const std::size_t idx = order[start + i];
        const pose::RasterClip clip = provider(idx, derive_seed(draw_base, idx));
        Workspace<float> ws;
        const double p = model.forward(clip, ws);
        const LossValue lv = bce_loss(p, y[idx]);
        sample_loss[i] = lv.loss;
        std::fill(sample_grads[i].begin(), sample_grads[i].end(), 0.0f);
        model.backward(ws, static_cast<float>(lv.d_probability * p * (1.0 - p)), sample_grads[i]);
      });
      std::fill(batch_grad.begin(), batch_grad.end(), 0.0f);
      for (std::size_t i = 0; i < b; ++i) {
        if (!std::isfinite(sample_loss[i])) {
          fail(ErrorKind::kNumeric, "non-finite loss at epoch " + std::to_string(epoch));
        }
        epoch_loss += sample_loss[i];
        kern.axpy(1.0f, sample_grads[i].data(), batch_grad.data(), n_params);
      }
      const float inv = 1.0f / static_cast<float>(b);
      for (float& g : batch_grad) g *= inv;
      adam_step<float>(model.parameters(), batch_grad, adam, config);
    }
    const double mean_loss = epoch_loss / static_cast<double>(order.size());
    if (!std::isfinite(mean_loss)) {
      fail(ErrorKind::kNumeric, "non-finite loss at epoch " + std::to_string(epoch));
    }
    result.history.push_back(mean_loss);
  }
  for (float v : model.parameters()) {
    if (!std::isfinite(v)) fail(ErrorKind::kNumeric, "training produced non-finite parameters");
  }
  return result;
}

TrainResult train(const ModelConfig& model_config, std::span<const pose::RasterClip> clips,
                  const TrainConfig& config) {
  std::vector<pose::Label> labels;
  for (const auto& c : clips) labels.push_back(c.label);
  return train(model_config, labels,
               [&clips](std::size_t i, std::uint64_t) { return clips[i]; }, config);
}

}  // namespace stimkit::nn
