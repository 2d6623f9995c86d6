// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "stimkit/error.hpp"
#include "stimkit/simd/kernels.hpp"

namespace stimkit::nn {

std::string shape_string(const Shape& shape) {
  std::ostringstream ss;
  ss << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) ss << (i ? "," : "") << shape[i];
  ss << "]";
  return ss.str();
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::kShape, what);
}

// Gathers the zero-padded k x k x cin patch around (y, x), in kernel row
// order (ky, kx, ci). Each kernel row is one contiguous run of the input.
template <typename T>
void gather_patch(std::span<const T> in, std::size_t h, std::size_t w, std::size_t cin,
                  std::size_t k, std::size_t y, std::size_t x, T* patch) {
  const std::size_t half = k / 2;
  const std::size_t run = k * cin;
  for (std::size_t ky = 0; ky < k; ++ky, patch += run) {
    if (y + ky < half || y + ky - half >= h) {
      std::fill(patch, patch + run, T(0));
      continue;
    }
    const T* row = in.data() + (y + ky - half) * w * cin;
    if (x >= half && x + half < w) {
      std::copy(row + (x - half) * cin, row + (x + half + 1) * cin, patch);
      continue;
    }
    for (std::size_t kx = 0; kx < k; ++kx) {
      T* dst = patch + kx * cin;
      if (x + kx < half || x + kx - half >= w) {
        std::fill(dst, dst + cin, T(0));
      } else {
        std::copy(row + (x + kx - half) * cin, row + (x + kx - half + 1) * cin, dst);
      }
    }
  }
}

template <typename T>
void scatter_patch(const T* patch, std::size_t h, std::size_t w, std::size_t cin, std::size_t k,
                   std::size_t y, std::size_t x, std::span<T> d_in) {
  const std::size_t half = k / 2;
  const std::size_t run = k * cin;
  for (std::size_t ky = 0; ky < k; ++ky, patch += run) {
    if (y + ky < half || y + ky - half >= h) continue;
    T* row = d_in.data() + (y + ky - half) * w * cin;
    for (std::size_t kx = 0; kx < k; ++kx) {
      if (x + kx < half || x + kx - half >= w) continue;
      T* dst = row + (x + kx - half) * cin;
      const T* src = patch + kx * cin;
      for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
    }
  }
}

// Per-thread buffers reused across calls; large fresh allocations would be
// mmap-backed and pay page faults every time.
template <typename T>
std::vector<T>& scratch(std::size_t slot, std::size_t size) {
  thread_local std::vector<T> buffers[2];
  std::vector<T>& b = buffers[slot];
  b.resize(size);
  return b;
}

std::vector<std::uint32_t>& scratch_index(std::size_t size) {
  thread_local std::vector<std::uint32_t> buffer;
  buffer.resize(size);
  return buffer;
}

}  // namespace

template <typename T>
T sigmoid(T z) {
  if (z >= T(0)) return T(1) / (T(1) + std::exp(-z));
  const T e = std::exp(z);
  return e / (T(1) + e);
}

template <typename T>
void relu_inplace(std::span<T> v) {
  for (T& x : v) x = x > T(0) ? x : T(0);
}

// All-zero patches contribute nothing to either product, so only the others
// are packed. Raster inputs are mostly background.
template <typename T>
void conv2d_forward(std::span<const T> in, std::size_t h, std::size_t w, std::size_t cin,
                    std::span<const T> kernel, std::size_t k, std::size_t cout,
                    std::span<const T> bias, std::span<T> out) {
  const std::size_t rows = k * k * cin;
  std::vector<T>& cols = scratch<T>(0, h * w * rows);
  std::vector<T>& packed = scratch<T>(1, h * w * cout);
  std::vector<std::uint32_t>& active = scratch_index(h * w);
  std::size_t n = 0;
  for (std::size_t p = 0; p < h * w; ++p) {
    T* patch = cols.data() + n * rows;
    gather_patch(in, h, w, cin, k, p / w, p % w, patch);
    std::copy(bias.begin(), bias.end(), out.data() + p * cout);
    if (std::any_of(patch, patch + rows, [](T v) { return v != T(0); })) {
      std::copy(bias.begin(), bias.end(), packed.data() + n * cout);
      active[n++] = static_cast<std::uint32_t>(p);
    }
  }
  simd::kernels<T>().gemm(cols.data(), rows, 1, kernel.data(), packed.data(), n, rows, cout);
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(packed.data() + i * cout, packed.data() + (i + 1) * cout, out.data() + active[i] * cout);
  }
}

template <typename T>
void conv2d_backward(std::span<const T> in, std::size_t h, std::size_t w, std::size_t cin,
                     std::span<const T> kernel, std::size_t k, std::size_t cout,
                     std::span<const T> d_out, std::span<T> d_in, std::span<T> d_kernel,
                     std::span<T> d_bias) {
  const auto& kern = simd::kernels<T>();
  const std::size_t rows = k * k * cin;
  const std::size_t pixels = h * w;
  std::vector<T>& cols = scratch<T>(0, pixels * rows);
  std::vector<T>& packed = scratch<T>(1, pixels * cout);
  std::size_t n = 0;
  for (std::size_t p = 0; p < pixels; ++p) {
    const T* g = d_out.data() + p * cout;
    for (std::size_t c = 0; c < cout; ++c) d_bias[c] += g[c];
    T* patch = cols.data() + n * rows;
    gather_patch(in, h, w, cin, k, p / w, p % w, patch);
    if (std::any_of(patch, patch + rows, [](T v) { return v != T(0); })) {
      std::copy(g, g + cout, packed.data() + n * cout);
      ++n;
    }
  }
  kern.gemm(cols.data(), 1, rows, packed.data(), d_kernel.data(), rows, n, cout);
  if (d_in.empty()) return;
  std::fill(d_in.begin(), d_in.end(), T(0));
  std::vector<T>& kernel_t = scratch<T>(1, cout * rows);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cout; ++c) kernel_t[c * rows + r] = kernel[r * cout + c];
  }
  cols.assign(pixels * rows, T(0));
  kern.gemm(d_out.data(), cout, 1, kernel_t.data(), cols.data(), pixels, cout, rows);
  for (std::size_t p = 0; p < pixels; ++p) {
    scatter_patch(cols.data() + p * rows, h, w, cin, k, p / w, p % w, d_in);
  }
}

template <typename T>
void maxpool2_forward(std::span<const T> in, std::size_t h, std::size_t w, std::size_t c,
                      std::span<T> out, std::span<std::uint32_t> argmax) {
  const std::size_t oh = h / 2;
  const std::size_t ow = w / 2;
  for (std::size_t y = 0; y < oh; ++y) {
    for (std::size_t x = 0; x < ow; ++x) {
      for (std::size_t ch = 0; ch < c; ++ch) {
        std::size_t best = ((2 * y) * w + 2 * x) * c + ch;
        for (std::size_t dy = 0; dy < 2; ++dy) {
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = ((2 * y + dy) * w + (2 * x + dx)) * c + ch;
            if (in[idx] > in[best]) best = idx;
          }
        }
        const std::size_t o = (y * ow + x) * c + ch;
        out[o] = in[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

template <typename T>
void maxpool2_backward(std::span<const T> d_out, std::span<const std::uint32_t> argmax,
                       std::span<T> d_in) {
  std::fill(d_in.begin(), d_in.end(), T(0));
  for (std::size_t i = 0; i < d_out.size(); ++i) d_in[argmax[i]] += d_out[i];
}

template <typename T>
void dense_forward(std::span<const T> x, std::span<const T> weights, std::span<const T> bias,
                   Activation act, std::span<T> out) {
  std::copy(bias.begin(), bias.end(), out.begin());
  simd::kernels<T>().gemv_t(x.data(), weights.data(), x.size(), out.size(), out.data());
  if (act == Activation::kRelu) {
    relu_inplace(out);
  } else if (act == Activation::kSigmoid) {
    for (T& v : out) v = sigmoid(v);
  }
}

template <typename T>
void dense_backward(std::span<const T> x, std::span<const T> weights, std::span<const T> out,
                    Activation act, std::span<const T> d_out, std::span<T> d_x,
                    std::span<T> d_weights, std::span<T> d_bias) {
  const std::size_t m = out.size();
  std::vector<T> d_pre(m);
  for (std::size_t j = 0; j < m; ++j) {
    switch (act) {
      case Activation::kNone: d_pre[j] = d_out[j]; break;
      case Activation::kRelu: d_pre[j] = out[j] > T(0) ? d_out[j] : T(0); break;
      case Activation::kSigmoid: d_pre[j] = d_out[j] * out[j] * (T(1) - out[j]); break;
    }
    d_bias[j] += d_pre[j];
  }
  const auto& kern = simd::kernels<T>();
  kern.ger(x.data(), d_pre.data(), x.size(), m, d_weights.data());
  if (!d_x.empty()) kern.gemv(weights.data(), d_pre.data(), x.size(), m, d_x.data());
}

template <typename T>
void lstm_step_forward(std::span<const T> x, std::span<const T> h_prev, std::span<const T> c_prev,
                       std::span<const T> w_x, std::span<const T> w_h, std::span<const T> bias,
                       std::size_t m, LstmStepCache<T>& cache) {
  const auto& kern = simd::kernels<T>();
  cache.x.assign(x.begin(), x.end());
  cache.h_prev.assign(h_prev.begin(), h_prev.end());
  cache.c_prev.assign(c_prev.begin(), c_prev.end());
  cache.gates.assign(bias.begin(), bias.end());
  kern.gemv_t(x.data(), w_x.data(), x.size(), 4 * m, cache.gates.data());
  kern.gemv_t(h_prev.data(), w_h.data(), m, 4 * m, cache.gates.data());
  cache.c.resize(m);
  cache.tanh_c.resize(m);
  cache.h.resize(m);
  for (std::size_t j = 0; j < m; ++j) {
    T& i = cache.gates[j];
    T& f = cache.gates[m + j];
    T& g = cache.gates[2 * m + j];
    T& o = cache.gates[3 * m + j];
    i = sigmoid(i);
    f = sigmoid(f);
    g = std::tanh(g);
    o = sigmoid(o);
    cache.c[j] = f * c_prev[j] + i * g;
    cache.tanh_c[j] = std::tanh(cache.c[j]);
    cache.h[j] = o * cache.tanh_c[j];
  }
}

template <typename T>
void lstm_step_backward(const LstmStepCache<T>& cache, std::span<const T> w_x,
                        std::span<const T> w_h, std::size_t m, std::span<const T> dh,
                        std::span<const T> dc_in, std::span<T> d_x, std::span<T> dh_prev,
                        std::span<T> dc_prev, std::span<T> d_wx, std::span<T> d_wh,
                        std::span<T> d_bias) {
  std::vector<T> dz(4 * m);
  for (std::size_t j = 0; j < m; ++j) {
    const T i = cache.gates[j];
    const T f = cache.gates[m + j];
    const T g = cache.gates[2 * m + j];
    const T o = cache.gates[3 * m + j];
    const T tc = cache.tanh_c[j];
    const T dc = dc_in[j] + dh[j] * o * (T(1) - tc * tc);
    const T d_o = dh[j] * tc;
    const T d_i = dc * g;
    const T d_g = dc * i;
    const T d_f = dc * cache.c_prev[j];
    dc_prev[j] = dc * f;
    dz[j] = d_i * i * (T(1) - i);
    dz[m + j] = d_f * f * (T(1) - f);
    dz[2 * m + j] = d_g * (T(1) - g * g);
    dz[3 * m + j] = d_o * o * (T(1) - o);
  }
  for (std::size_t j = 0; j < 4 * m; ++j) d_bias[j] += dz[j];
  const auto& kern = simd::kernels<T>();
  kern.ger(cache.x.data(), dz.data(), cache.x.size(), 4 * m, d_wx.data());
  kern.ger(cache.h_prev.data(), dz.data(), m, 4 * m, d_wh.data());
  if (!d_x.empty()) kern.gemv(w_x.data(), dz.data(), cache.x.size(), 4 * m, d_x.data());
  kern.gemv(w_h.data(), dz.data(), m, 4 * m, dh_prev.data());
}

// ---- Tensor wrappers -------------------------------------------------------

template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& kernels, const Tensor<T>& bias) {
  require(input.shape.size() == 3, "conv2d input must be [H,W,C], got " + shape_string(input.shape));
  require(kernels.shape.size() == 4 && kernels.dim(0) == kernels.dim(1) && kernels.dim(0) % 2 == 1,
          "conv2d kernels must be [k,k,Cin,Cout] with odd k, got " + shape_string(kernels.shape));
  require(kernels.dim(2) == input.dim(2),
          "conv2d channel mismatch: input " + shape_string(input.shape) + " kernels " +
              shape_string(kernels.shape));
  require(bias.size() == kernels.dim(3), "conv2d bias must have Cout entries");
  Tensor<T> out({input.dim(0), input.dim(1), kernels.dim(3)});
  conv2d_forward<T>(input.span(), input.dim(0), input.dim(1), input.dim(2), kernels.span(),
                    kernels.dim(0), kernels.dim(3), bias.span(), out.span());
  return out;
}

template <typename T>
Conv2dGrads<T> conv2d_grads(const Tensor<T>& input, const Tensor<T>& kernels,
                            const Tensor<T>& d_out) {
  require(d_out.shape == Shape({input.dim(0), input.dim(1), kernels.dim(3)}),
          "conv2d gradient shape mismatch");
  require(kernels.dim(2) == input.dim(2), "conv2d channel mismatch");
  Conv2dGrads<T> g{Tensor<T>(input.shape), Tensor<T>(kernels.shape), Tensor<T>({kernels.dim(3)})};
  conv2d_backward<T>(input.span(), input.dim(0), input.dim(1), input.dim(2), kernels.span(),
                     kernels.dim(0), kernels.dim(3), d_out.span(), g.input.span(),
                     g.kernels.span(), g.bias.span());
  return g;
}

template <typename T>
MaxPoolResult<T> maxpool2(const Tensor<T>& input) {
  require(input.shape.size() == 3, "maxpool2 input must be [H,W,C]");
  require(input.dim(0) % 2 == 0 && input.dim(1) % 2 == 0,
          "maxpool2 needs even spatial dims, got " + shape_string(input.shape));
  MaxPoolResult<T> r{Tensor<T>({input.dim(0) / 2, input.dim(1) / 2, input.dim(2)}), {}};
  r.argmax.resize(r.output.size());
  maxpool2_forward<T>(input.span(), input.dim(0), input.dim(1), input.dim(2), r.output.span(),
                      r.argmax);
  return r;
}

template <typename T>
Tensor<T> maxpool2_grads(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                         const Tensor<T>& d_out) {
  require(argmax.size() == d_out.size(), "maxpool2 gradient shape mismatch");
  Tensor<T> d_in(input_shape);
  maxpool2_backward<T>(d_out.span(), argmax, d_in.span());
  return d_in;
}

template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weights, const Tensor<T>& bias,
                Activation act) {
  require(weights.shape.size() == 2 && weights.dim(0) == input.size(),
          "dense weights " + shape_string(weights.shape) + " do not match input of " +
              std::to_string(input.size()));
  require(bias.size() == weights.dim(1), "dense bias size mismatch");
  Tensor<T> out({weights.dim(1)});
  dense_forward<T>(input.span(), weights.span(), bias.span(), act, out.span());
  return out;
}

template <typename T>
DenseGrads<T> dense_grads(const Tensor<T>& input, const Tensor<T>& weights,
                          const Tensor<T>& bias, Activation act, const Tensor<T>& d_out) {
  const Tensor<T> out = dense(input, weights, bias, act);
  require(d_out.size() == out.size(), "dense gradient size mismatch");
  DenseGrads<T> g{Tensor<T>(input.shape), Tensor<T>(weights.shape), Tensor<T>(bias.shape)};
  dense_backward<T>(input.span(), weights.span(), out.span(), act, d_out.span(), g.input.span(),
                    g.weights.span(), g.bias.span());
  return g;
}

namespace {
template <typename T>
void check_lstm(const Tensor<T>& x, const LstmParams<T>& p) {
  const std::size_t m = p.hidden();
  require(p.bias.size() == 4 * m && m > 0, "lstm bias must have 4*hidden entries");
  require(p.w_x.shape == Shape({x.size(), 4 * m}),
          "lstm w_x must be [d,4m], got " + shape_string(p.w_x.shape));
  require(p.w_h.shape == Shape({m, 4 * m}), "lstm w_h must be [m,4m], got " + shape_string(p.w_h.shape));
}
}  // namespace

template <typename T>
LstmState<T> lstm_step(const Tensor<T>& x, const Tensor<T>& h_prev, const Tensor<T>& c_prev,
                       const LstmParams<T>& params) {
  check_lstm(x, params);
  const std::size_t m = params.hidden();
  require(h_prev.size() == m && c_prev.size() == m, "lstm state size mismatch");
  LstmStepCache<T> cache;
  lstm_step_forward<T>(x.span(), h_prev.span(), c_prev.span(), params.w_x.span(),
                       params.w_h.span(), params.bias.span(), m, cache);
  return {Tensor<T>({m}, cache.h), Tensor<T>({m}, cache.c)};
}

template <typename T>
LstmState<T> lstm_sequence(const std::vector<Tensor<T>>& inputs, const LstmParams<T>& params) {
  const std::size_t m = params.hidden();
  LstmState<T> s{Tensor<T>({m}), Tensor<T>({m})};
  for (const auto& x : inputs) s = lstm_step(x, s.h, s.c, params);
  return s;
}

template <typename T>
LstmSequenceGrads<T> lstm_sequence_grads(const std::vector<Tensor<T>>& inputs,
                                         const LstmParams<T>& params,
                                         const Tensor<T>& d_final_h) {
  const std::size_t m = params.hidden();
  require(d_final_h.size() == m, "lstm output gradient size mismatch");
  std::vector<LstmStepCache<T>> caches(inputs.size());
  std::vector<T> h(m, T(0)), c(m, T(0));
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    check_lstm(inputs[t], params);
    lstm_step_forward<T>(inputs[t].span(), h, c, params.w_x.span(), params.w_h.span(),
                         params.bias.span(), m, caches[t]);
    h = caches[t].h;
    c = caches[t].c;
  }
  LstmSequenceGrads<T> g;
  g.params = {Tensor<T>(params.w_x.shape), Tensor<T>(params.w_h.shape), Tensor<T>(params.bias.shape)};
  g.inputs.resize(inputs.size());
  std::vector<T> dh(d_final_h.data), dc(m, T(0)), dh_prev(m), dc_prev(m);
  for (std::size_t t = inputs.size(); t-- > 0;) {
    g.inputs[t] = Tensor<T>(inputs[t].shape);
    lstm_step_backward<T>(caches[t], params.w_x.span(), params.w_h.span(), m, dh, dc,
                          g.inputs[t].span(), dh_prev, dc_prev, g.params.w_x.span(),
                          g.params.w_h.span(), g.params.bias.span());
    dh = dh_prev;
    dc = dc_prev;
  }
  return g;
}

#define STIMKIT_INSTANTIATE_LAYERS(T)                                                          \
  template T sigmoid<T>(T);                                                                    \
  template void relu_inplace<T>(std::span<T>);                                                 \
  template void conv2d_forward<T>(std::span<const T>, std::size_t, std::size_t, std::size_t,   \
                                  std::span<const T>, std::size_t, std::size_t,                \
                                  std::span<const T>, std::span<T>);                           \
  template void conv2d_backward<T>(std::span<const T>, std::size_t, std::size_t, std::size_t,  \
                                   std::span<const T>, std::size_t, std::size_t,               \
                                   std::span<const T>, std::span<T>, std::span<T>,             \
                                   std::span<T>);                                              \
  template void maxpool2_forward<T>(std::span<const T>, std::size_t, std::size_t, std::size_t, \
                                    std::span<T>, std::span<std::uint32_t>);                   \
  template void maxpool2_backward<T>(std::span<const T>, std::span<const std::uint32_t>,       \
                                     std::span<T>);                                            \
  template void dense_forward<T>(std::span<const T>, std::span<const T>, std::span<const T>,   \
                                 Activation, std::span<T>);                                    \
  template void dense_backward<T>(std::span<const T>, std::span<const T>, std::span<const T>,  \
                                  Activation, std::span<const T>, std::span<T>, std::span<T>,  \
                                  std::span<T>);                                               \
  template void lstm_step_forward<T>(std::span<const T>, std::span<const T>,                   \
                                     std::span<const T>, std::span<const T>,                   \
                                     std::span<const T>, std::span<const T>, std::size_t,      \
                                     LstmStepCache<T>&);                                       \
  template void lstm_step_backward<T>(const LstmStepCache<T>&, std::span<const T>,             \
                                      std::span<const T>, std::size_t, std::span<const T>,     \
                                      std::span<const T>, std::span<T>, std::span<T>,          \
                                      std::span<T>, std::span<T>, std::span<T>, std::span<T>); \
  template Tensor<T> conv2d<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);          \
  template Conv2dGrads<T> conv2d_grads<T>(const Tensor<T>&, const Tensor<T>&,                  \
                                          const Tensor<T>&);                                   \
  template MaxPoolResult<T> maxpool2<T>(const Tensor<T>&);                                     \
  template Tensor<T> maxpool2_grads<T>(const Shape&, const std::vector<std::uint32_t>&,       \
                                       const Tensor<T>&);                                      \
  template Tensor<T> dense<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                              Activation);                                                     \
  template DenseGrads<T> dense_grads<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,  \
                                        Activation, const Tensor<T>&);                         \
  template LstmState<T> lstm_step<T>(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,     \
                                     const LstmParams<T>&);                                    \
  template LstmState<T> lstm_sequence<T>(const std::vector<Tensor<T>>&, const LstmParams<T>&); \
  template LstmSequenceGrads<T> lstm_sequence_grads<T>(                                        \
      const std::vector<Tensor<T>>&, const LstmParams<T>&, const Tensor<T>&);

STIMKIT_INSTANTIATE_LAYERS(float)
STIMKIT_INSTANTIATE_LAYERS(double)

#undef STIMKIT_INSTANTIATE_LAYERS

}  // namespace stimkit::nn
