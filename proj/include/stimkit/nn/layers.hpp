// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stimkit/nn/tensor.hpp"

// Forward and backward passes of the fixed layer set. The span-level
// functions are what the model runs; the Tensor-level wrappers validate
// shapes and are the public, testable surface. Backward functions
// accumulate into parameter gradients and overwrite input gradients.

namespace stimkit::nn {

enum class Activation { kNone, kRelu, kSigmoid };

// ---- span level -----------------------------------------------------------

/// Same-padded (zero) cross-correlation. in: [h, w, cin], kernel:
/// [k, k, cin, cout], out: [h, w, cout].
template <typename T>
void conv2d_forward(std::span<const T> in, std::size_t h, std::size_t w, std::size_t cin,
                    std::span<const T> kernel, std::size_t k, std::size_t cout,
                    std::span<const T> bias, std::span<T> out);

/// d_in may be empty when the input gradient is not needed.
template <typename T>
void conv2d_backward(std::span<const T> in, std::size_t h, std::size_t w, std::size_t cin,
                     std::span<const T> kernel, std::size_t k, std::size_t cout,
                     std::span<const T> d_out, std::span<T> d_in, std::span<T> d_kernel,
                     std::span<T> d_bias);

/// 2x2 non-overlapping max; argmax holds flat input indices (first on ties).
template <typename T>
void maxpool2_forward(std::span<const T> in, std::size_t h, std::size_t w, std::size_t c,
                      std::span<T> out, std::span<std::uint32_t> argmax);

template <typename T>
void maxpool2_backward(std::span<const T> d_out, std::span<const std::uint32_t> argmax,
                       std::span<T> d_in);

/// out = act(weights^T x + bias); weights: [n, m].
template <typename T>
void dense_forward(std::span<const T> x, std::span<const T> weights, std::span<const T> bias,
                   Activation act, std::span<T> out);

/// Given the gradient w.r.t. the activated output.
template <typename T>
void dense_backward(std::span<const T> x, std::span<const T> weights, std::span<const T> out,
                    Activation act, std::span<const T> d_out, std::span<T> d_x,
                    std::span<T> d_weights, std::span<T> d_bias);

template <typename T>
void relu_inplace(std::span<T> v);

template <typename T>
T sigmoid(T z);

// ---- LSTM -----------------------------------------------------------------

/// Gate order in the 4m-wide blocks: input, forget, candidate, output.
template <typename T>
struct LstmStepCache {
  std::vector<T> x;
  std::vector<T> h_prev;
  std::vector<T> c_prev;
  std::vector<T> gates;  // activated i, f, g, o
  std::vector<T> c;
  std::vector<T> tanh_c;
  std::vector<T> h;
};

template <typename T>
void lstm_step_forward(std::span<const T> x, std::span<const T> h_prev, std::span<const T> c_prev,
                       std::span<const T> w_x, std::span<const T> w_h, std::span<const T> bias,
                       std::size_t hidden, LstmStepCache<T>& cache);

/// dh, dc: gradients flowing into this step's h and c. Writes d_x, dh_prev,
/// dc_prev; accumulates weight gradients.
template <typename T>
void lstm_step_backward(const LstmStepCache<T>& cache, std::span<const T> w_x,
                        std::span<const T> w_h, std::size_t hidden, std::span<const T> dh,
                        std::span<const T> dc, std::span<T> d_x, std::span<T> dh_prev,
                        std::span<T> dc_prev, std::span<T> d_wx, std::span<T> d_wh,
                        std::span<T> d_bias);

// ---- Tensor level ---------------------------------------------------------

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias);

template <typename T>
struct Conv2dGrads {
  Tensor<T> input;
  Tensor<T> kernels;
  Tensor<T> bias;
};

template <typename T>
Conv2dGrads<T> conv2d_grads(const Tensor<T>& input, const Tensor<T>& kernels,
                            const Tensor<T>& d_out);

template <typename T>
struct MaxPoolResult {
  Tensor<T> output;
  std::vector<std::uint32_t> argmax;
};

template <typename T>
MaxPoolResult<T> maxpool2(const Tensor<T>& input);

template <typename T>
Tensor<T> maxpool2_grads(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                         const Tensor<T>& d_out);

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                Activation act);

template <typename T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weights;
  Tensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_grads(const Tensor<T>& input, const Tensor<T>& weights,
                          const Tensor<T>& bias, Activation act, const Tensor<T>& d_out);

template <typename T>
struct LstmParams {
  Tensor<T> w_x;   // [d, 4m]
  Tensor<T> w_h;   // [m, 4m]
  Tensor<T> bias;  // [4m]

  std::size_t hidden() const { return bias.size() / 4; }
};

template <typename T>
struct LstmState {
  Tensor<T> h;
  Tensor<T> c;
};

template <typename T>
LstmState<T> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                       const LstmParams<T>& params);

/// Runs the LSTM over `inputs` from zero state, then backpropagates
/// d_final_h through time. Returns parameter gradients and per-step input
/// gradients.
template <typename T>
struct LstmSequenceGrads {
  LstmParams<T> params;
  std::vector<Tensor<T>> inputs;
};

template <typename T>
LstmSequenceGrads<T> lstm_sequence_grads(const std::vector<Tensor<T>>& inputs,
                                         const LstmParams<T>& params,
                                         const Tensor<T>& d_final_h);

template <typename T>
LstmState<T> lstm_sequence(const std::vector<Tensor<T>>& inputs, const LstmParams<T>& params);

}  // namespace stimkit::nn
