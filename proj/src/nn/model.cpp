// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/nn/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "stimkit/error.hpp"
#include "stimkit/rng.hpp"
#include "stimkit/simd/kernels.hpp"

namespace stimkit::nn {

void ModelConfig::validate() const {
  if (length < 2) fail(ErrorKind::kConfig, "model.length must be >= 2");
  if (height < 1 || width < 1 || channels < 1) {
    fail(ErrorKind::kConfig, "model input dimensions must be >= 1");
  }
  std::size_t divisor = 1;
  for (std::size_t i = 0; i < conv_blocks.size(); ++i) {
    const ConvBlock& b = conv_blocks[i];
    const std::string where = "model.conv_blocks[" + std::to_string(i) + "]";
    if (b.filters < 1) fail(ErrorKind::kConfig, where + ".filters must be >= 1");
    if (b.kernel < 1 || b.kernel % 2 == 0) fail(ErrorKind::kConfig, where + ".kernel must be odd");
    if (b.pool != 2) fail(ErrorKind::kConfig, where + ".pool must be 2");
    divisor *= b.pool;
  }
  if (height % divisor != 0 || width % divisor != 0) {
    fail(ErrorKind::kConfig, "model input dimensions must be divisible by the pooling stack (" +
                                 std::to_string(divisor) + ")");
  }
  if (frame_embedding < 1) fail(ErrorKind::kConfig, "model.frame_embedding must be >= 1");
  if (lstm_hidden < 1) fail(ErrorKind::kConfig, "model.lstm_hidden must be >= 1");
}

std::size_t ModelConfig::flat_features() const {
  std::size_t h = height, w = width, c = channels;
  for (const ConvBlock& b : conv_blocks) {
    h /= b.pool;
    w /= b.pool;
    c = b.filters;
  }
  return h * w * c;
}

std::vector<ParamSlot> parameter_layout(const ModelConfig& config) {
  std::vector<ParamSlot> slots;
  std::size_t offset = 0;
  auto add = [&](std::string name, Shape shape) {
    const std::size_t n = element_count(shape);
    slots.push_back(ParamSlot{std::move(name), std::move(shape), offset, n});
    offset += n;
  };
  std::size_t cin = config.channels;
  for (std::size_t i = 0; i < config.conv_blocks.size(); ++i) {
    const ConvBlock& b = config.conv_blocks[i];
    add("conv" + std::to_string(i) + ".kernel", {b.kernel, b.kernel, cin, b.filters});
    add("conv" + std::to_string(i) + ".bias", {b.filters});
    cin = b.filters;
  }
  const std::size_t e = config.frame_embedding;
  const std::size_t m = config.lstm_hidden;
  add("embed.weight", {config.flat_features(), e});
  add("embed.bias", {e});
  add("lstm.w_x", {e, 4 * m});
  add("lstm.w_h", {m, 4 * m});
  add("lstm.bias", {4 * m});
  add("out.weight", {m, 1});
  add("out.bias", {1});
  return slots;
}

template <typename T>
std::uint64_t Workspace<T>::activation_pattern() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t v) {
    h ^= v;
    h *= 0x100000001b3ULL;
  };
  for (const Frame& f : frames) {
    for (const auto& out : f.conv_out) {
      for (T v : out) mix(v > T(0));
    }
    for (const auto& am : f.argmax) {
      for (std::size_t v : am) mix(v);
    }
  }
  for (T v : embedding) mix(v > T(0));
  return h;
}

template <typename T>
Model<T>::Model(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  layout_ = parameter_layout(config_);
  params_.assign(layout_.back().offset + layout_.back().count, T(0));
}

template <typename T>
const ParamSlot& Model<T>::slot(std::string_view name) const {
  for (const ParamSlot& s : layout_) {
    if (s.name == name) return s;
  }
  fail(ErrorKind::kShape, "unknown parameter " + std::string(name));
}

template <typename T>
std::span<T> Model<T>::parameter(std::string_view name) {
  const ParamSlot& s = slot(name);
  return std::span<T>(params_).subspan(s.offset, s.count);
}

template <typename T>
std::span<const T> Model<T>::parameter(std::string_view name) const {
  const ParamSlot& s = slot(name);
  return std::span<const T>(params_).subspan(s.offset, s.count);
}

template <typename T>
void Model<T>::initialize(std::uint64_t seed) {
  Rng rng(derive_seed(seed, "init"));
  std::fill(params_.begin(), params_.end(), T(0));
  for (const ParamSlot& s : layout_) {
    if (s.shape.size() < 2) continue;  // biases stay zero
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    if (s.shape.size() == 4) {
      const std::size_t receptive = s.shape[0] * s.shape[1];
      fan_in = receptive * s.shape[2];
      fan_out = receptive * s.shape[3];
    } else {
      fan_in = s.shape[0];
      fan_out = s.shape[1];
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < s.count; ++i) params_[s.offset + i] = static_cast<T>(dist(rng));
  }
  auto bias = parameter("lstm.bias");
  const std::size_t m = config_.lstm_hidden;
  std::fill(bias.begin() + static_cast<std::ptrdiff_t>(m), bias.begin() + static_cast<std::ptrdiff_t>(2 * m), T(1));
}

template <typename T>
T Model<T>::forward(const pose::RasterClip& clip, Workspace<T>& ws) const {
  if (static_cast<std::size_t>(clip.length) != config_.length ||
      static_cast<std::size_t>(clip.height) != config_.height ||
      static_cast<std::size_t>(clip.width) != config_.width || config_.channels != 1) {
    fail(ErrorKind::kShape, "clip " + std::to_string(clip.length) + "x" +
                                std::to_string(clip.height) + "x" + std::to_string(clip.width) +
                                " does not match model input " + std::to_string(config_.length) +
                                "x" + std::to_string(config_.height) + "x" +
                                std::to_string(config_.width));
  }
  if constexpr (std::is_same_v<T, float>) {
    return forward(std::span<const float>(clip.data), ws);
  } else {
    std::vector<T> converted(clip.data.begin(), clip.data.end());
    return forward(std::span<const T>(converted), ws);
  }
}

template <typename T>
T Model<T>::forward(std::span<const T> frames, Workspace<T>& ws) const {
  const std::size_t frame_size = config_.height * config_.width * config_.channels;
  if (frames.size() != config_.length * frame_size) {
    fail(ErrorKind::kShape, "input has " + std::to_string(frames.size()) + " values, model expects " +
                                std::to_string(config_.length * frame_size));
  }
  const std::size_t nb = config_.conv_blocks.size();
  ws.frames.resize(config_.length);
  ws.lstm.resize(config_.length);
  const auto embed_w = parameter("embed.weight");
  const auto embed_b = parameter("embed.bias");
  const std::size_t flat_n = config_.flat_features();
  const std::size_t emb_n = config_.frame_embedding;
  ws.flat.resize(config_.length * flat_n);
  ws.embedding.resize(config_.length * emb_n);

  for (std::size_t t = 0; t < config_.length; ++t) {
    auto& f = ws.frames[t];
    f.block_input.resize(nb);
    f.conv_out.resize(nb);
    f.argmax.resize(nb);
    std::vector<T> cur(frames.begin() + static_cast<std::ptrdiff_t>(t * frame_size),
                       frames.begin() + static_cast<std::ptrdiff_t>((t + 1) * frame_size));
    std::size_t h = config_.height, w = config_.width, c = config_.channels;
    for (std::size_t b = 0; b < nb; ++b) {
      const ConvBlock& blk = config_.conv_blocks[b];
      const std::string prefix = "conv" + std::to_string(b);
      f.block_input[b] = std::move(cur);
      f.conv_out[b].resize(h * w * blk.filters);
      conv2d_forward<T>(f.block_input[b], h, w, c, parameter(prefix + ".kernel"), blk.kernel,
                        blk.filters, parameter(prefix + ".bias"), f.conv_out[b]);
      relu_inplace<T>(f.conv_out[b]);
      cur.assign((h / 2) * (w / 2) * blk.filters, T(0));
      f.argmax[b].resize(cur.size());
      maxpool2_forward<T>(f.conv_out[b], h, w, blk.filters, cur, f.argmax[b]);
      h /= 2;
      w /= 2;
      c = blk.filters;
    }
    std::copy(cur.begin(), cur.end(), ws.flat.begin() + static_cast<std::ptrdiff_t>(t * flat_n));
  }

  // One product for all frames keeps the large embedding matrix streaming
  // through cache once per sample.
  for (std::size_t t = 0; t < config_.length; ++t) {
    std::copy(embed_b.begin(), embed_b.end(), ws.embedding.begin() + static_cast<std::ptrdiff_t>(t * emb_n));
  }
  simd::kernels<T>().gemm(ws.flat.data(), flat_n, 1, embed_w.data(), ws.embedding.data(),
                          config_.length, flat_n, emb_n);
  relu_inplace<T>(ws.embedding);

  const std::size_t m = config_.lstm_hidden;
  std::vector<T> h(m, T(0)), c(m, T(0));
  for (std::size_t t = 0; t < config_.length; ++t) {
    lstm_step_forward<T>(std::span<const T>(ws.embedding).subspan(t * emb_n, emb_n), h, c, parameter("lstm.w_x"),
                         parameter("lstm.w_h"), parameter("lstm.bias"), m, ws.lstm[t]);
    h = ws.lstm[t].h;
    c = ws.lstm[t].c;
  }
  const auto out_w = parameter("out.weight");
  ws.logit = simd::kernels<T>().dot(out_w.data(), h.data(), m) + parameter("out.bias")[0];
  ws.probability = sigmoid(ws.logit);
  return ws.probability;
}

template <typename T>
T Model<T>::predict(const pose::RasterClip& clip) const {
  Workspace<T> ws;
  return forward(clip, ws);
}

template <typename T>
void Model<T>::backward(const Workspace<T>& ws, T d_logit, std::span<T> grads) const {
  if (grads.size() != params_.size()) fail(ErrorKind::kShape, "gradient buffer size mismatch");
  auto g = [&](std::string_view name) {
    const ParamSlot& s = slot(name);
    return grads.subspan(s.offset, s.count);
  };
  const std::size_t m = config_.lstm_hidden;
  const std::size_t nb = config_.conv_blocks.size();
  const auto& last = ws.lstm.back();

  // Output unit.
  std::vector<T> dh(m), dc(m, T(0)), dh_prev(m), dc_prev(m);
  const auto out_w = parameter("out.weight");
  auto g_out_w = g("out.weight");
  for (std::size_t j = 0; j < m; ++j) {
    dh[j] = out_w[j] * d_logit;
    g_out_w[j] += last.h[j] * d_logit;
  }
  g("out.bias")[0] += d_logit;

  const std::size_t len = config_.length;
  const std::size_t flat_n = config_.flat_features();
  const std::size_t emb_n = config_.frame_embedding;
  auto g_wx = g("lstm.w_x");
  auto g_wh = g("lstm.w_h");
  auto g_lb = g("lstm.bias");
  thread_local std::vector<T> d_emb, d_emb_t, d_flat_t, d_conv, d_in, d_cur;

  // Through time; d_emb collects the gradient at every step's embedding.
  d_emb.assign(len * emb_n, T(0));
  for (std::size_t t = len; t-- > 0;) {
    lstm_step_backward<T>(ws.lstm[t], parameter("lstm.w_x"), parameter("lstm.w_h"), m, dh, dc,
                          std::span<T>(d_emb).subspan(t * emb_n, emb_n), dh_prev, dc_prev, g_wx,
                          g_wh, g_lb);
    std::swap(dh, dh_prev);
    std::swap(dc, dc_prev);
  }

  // Embedding layer, all frames at once.
  const auto& kern = simd::kernels<T>();
  const auto embed_w = parameter("embed.weight");
  auto g_embed_b = g("embed.bias");
  for (std::size_t i = 0; i < d_emb.size(); ++i) {
    if (!(ws.embedding[i] > T(0))) d_emb[i] = T(0);
    g_embed_b[i % emb_n] += d_emb[i];
  }
  kern.gemm(ws.flat.data(), 1, flat_n, d_emb.data(), g("embed.weight").data(), flat_n, len, emb_n);
  // d_flat^T = W d_emb^T, with the frame axis padded to a full vector so the
  // large matrix is read once, row by row.
  const std::size_t padded = (len + 7) / 8 * 8;
  d_emb_t.assign(emb_n * padded, T(0));
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t c = 0; c < emb_n; ++c) d_emb_t[c * padded + t] = d_emb[t * emb_n + c];
  }
  d_flat_t.assign(flat_n * padded, T(0));
  kern.gemm(embed_w.data(), emb_n, 1, d_emb_t.data(), d_flat_t.data(), flat_n, emb_n, padded);

  for (std::size_t t = 0; t < len; ++t) {
    const auto& f = ws.frames[t];
    d_cur.resize(flat_n);
    for (std::size_t i = 0; i < flat_n; ++i) d_cur[i] = d_flat_t[i * padded + t];
    std::size_t h = config_.height >> nb;
    std::size_t w = config_.width >> nb;
    for (std::size_t b = nb; b-- > 0;) {
      const ConvBlock& blk = config_.conv_blocks[b];
      h *= 2;
      w *= 2;
      // Pool and ReLU together: a pooled value is positive exactly when the
      // conv output at its argmax is.
      const T* pooled = b + 1 < nb ? f.block_input[b + 1].data() : ws.flat.data() + t * flat_n;
      d_conv.assign(f.conv_out[b].size(), T(0));
      for (std::size_t i = 0; i < d_cur.size(); ++i) {
        if (pooled[i] > T(0)) d_conv[f.argmax[b][i]] = d_cur[i];
      }
      const std::size_t cin = b == 0 ? config_.channels : config_.conv_blocks[b - 1].filters;
      d_in.resize(b == 0 ? 0 : f.block_input[b].size());
      const std::string prefix = "conv" + std::to_string(b);
      conv2d_backward<T>(f.block_input[b], h, w, cin, parameter(prefix + ".kernel"), blk.kernel,
                         blk.filters, d_conv, d_in, g(prefix + ".kernel"), g(prefix + ".bias"));
      std::swap(d_cur, d_in);
    }
  }
}

LossValue bce_loss(double p, int label) {
  const double q = std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip);
  const double y = label ? 1.0 : 0.0;
  return LossValue{-(y * std::log(q) + (1.0 - y) * std::log(1.0 - q)),
                   -y / q + (1.0 - y) / (1.0 - q)};
}

template struct Workspace<float>;
template struct Workspace<double>;
template class Model<float>;
template class Model<double>;

}  // namespace stimkit::nn
