// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

#include "stimkit/error.hpp"
#include "stimkit/rng.hpp"

namespace stimkit::nn {
namespace {

constexpr double kFloor = 1e-8;

void record(GradCheckReport& r, double analytic, double numeric, const std::string& where) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), kFloor});
  const double err = std::abs(analytic - numeric) / denom;
  ++r.checked;
  if (err > r.max_rel_error || r.worst.empty()) {
    r.max_rel_error = std::max(err, r.max_rel_error);
    r.worst = where;
  }
}

// Central difference on x[i]; sets `kink` when either probe changes the
// activation pattern.
double central_difference(std::vector<double>& x, std::size_t i, double eps,
                          const std::function<double()>& f,
                          const std::function<std::uint64_t()>& pattern, std::uint64_t base,
                          bool& kink) {
  const double saved = x[i];
  x[i] = saved + eps;
  const double up = f();
  const std::uint64_t p_up = pattern();
  x[i] = saved - eps;
  const double down = f();
  const std::uint64_t p_down = pattern();
  x[i] = saved;
  kink = p_up != base || p_down != base;
  return (up - down) / (2 * eps);
}

std::vector<double> uniform(Rng& rng, std::size_t n, double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

std::uint64_t hash_mask(std::span<const double> v) {
  std::uint64_t h = 1469598103934665603ull;
  for (double x : v) h = (h ^ (x > 0 ? 1u : 0u)) * 1099511628211ull;
  return h;
}

std::uint64_t hash_indices(std::span<const std::uint32_t> v) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint32_t x : v) h = (h ^ x) * 1099511628211ull;
  return h;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Checks every coordinate of each named buffer against `objective`.
void sweep(GradCheckReport& report, double eps,
           std::vector<std::pair<std::string, std::pair<std::vector<double>*, const std::vector<double>*>>> targets,
           const std::function<double()>& objective, const std::function<std::uint64_t()>& pattern) {
  objective();
  const std::uint64_t base = pattern();
  for (auto& [name, bufs] : targets) {
    std::vector<double>& x = *bufs.first;
    const std::vector<double>& analytic = *bufs.second;
    for (std::size_t i = 0; i < x.size(); ++i) {
      bool kink = false;
      const double numeric = central_difference(x, i, eps, objective, pattern, base, kink);
      if (kink) {
        ++report.skipped_kinks;
        continue;
      }
      record(report, analytic[i], numeric, name + "[" + std::to_string(i) + "]");
    }
  }
}

double bce_from_logit(double z, int y) {
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

ModelConfig micro_config(std::uint64_t seed) {
  ModelConfig c;
  c.length = 2;
  c.height = 8;
  c.width = 8;
  c.channels = 1;
  c.conv_blocks = {{4, 3, 2}};
  c.frame_embedding = 6;
  c.lstm_hidden = 4;
  c.seed = seed;
  return c;
}

pose::RasterClip random_sample(const ModelConfig& config, std::uint64_t seed, pose::Label label) {
  pose::RasterClip clip;
  clip.length = static_cast<int>(config.length);
  clip.height = static_cast<int>(config.height);
  clip.width = static_cast<int>(config.width);
  clip.label = label;
  clip.data.resize(config.length * config.height * config.width);
  Rng rng(derive_seed(seed, "sample"));
  std::bernoulli_distribution on(0.3);
  for (float& v : clip.data) v = on(rng) ? 1.0f : 0.0f;
  return clip;
}

GradCheckReport grad_check(const Model<double>& model_in, const pose::RasterClip& sample,
                           const GradCheckOptions& options) {
  if (sample.label == pose::Label::kUnset) {
    fail(ErrorKind::kConfig, "grad_check sample needs a label");
  }
  const int y = sample.label == pose::Label::kPositive ? 1 : 0;
  Model<double> model = model_in;
  Workspace<double> ws;
  model.forward(sample, ws);

  std::vector<double> analytic(model.parameters().size(), 0.0);
  model.backward(ws, ws.probability - y, analytic);
  if (options.conv_grad_scale != 1.0) {
    for (const ParamSlot& s : model.layout()) {
      if (s.name.starts_with("conv") && s.name.ends_with(".kernel")) {
        for (std::size_t i = 0; i < s.count; ++i) analytic[s.offset + i] *= options.conv_grad_scale;
      }
    }
  }

  GradCheckReport report;
  auto params = model.parameters();
  std::vector<double> x(params.begin(), params.end());
  auto objective = [&] {
    std::copy(x.begin(), x.end(), params.begin());
    model.forward(sample, ws);
    return bce_from_logit(ws.logit, y);
  };
  auto pattern = [&] { return ws.activation_pattern(); };
  objective();
  const std::uint64_t base = pattern();
  for (const ParamSlot& s : model.layout()) {
    for (std::size_t i = 0; i < s.count; ++i) {
      bool kink = false;
      const double numeric = central_difference(x, s.offset + i, options.epsilon, objective, pattern, base, kink);
      if (kink) {
        ++report.skipped_kinks;
        continue;
      }
      record(report, analytic[s.offset + i], numeric, s.name + "[" + std::to_string(i) + "]");
    }
  }
  std::copy(x.begin(), x.end(), params.begin());
  return report;
}

GradCheckReport grad_check(const ModelConfig& config, const pose::RasterClip& sample,
                           const GradCheckOptions& options) {
  Model<double> model(config);
  model.initialize(config.seed);
  // Nonzero biases keep pre-activations off the ReLU kink at exactly 0.
  Rng rng(derive_seed(config.seed, "grad_check.bias"));
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  for (const ParamSlot& s : model.layout()) {
    if (s.name.ends_with(".bias")) {
      for (double& b : model.parameter(s.name)) b += dist(rng);
    }
  }
  return grad_check(model, sample, options);
}

GradCheckReport check_conv2d(std::uint64_t seed, double epsilon) {
  Rng rng(derive_seed(seed, "check.conv2d"));
  const std::size_t h = 5, w = 6, cin = 2, cout = 3, k = 3;
  Tensor<double> in({h, w, cin}, uniform(rng, h * w * cin, -1, 1));
  Tensor<double> kern({k, k, cin, cout}, uniform(rng, k * k * cin * cout, -1, 1));
  Tensor<double> bias({cout}, uniform(rng, cout, -1, 1));
  const std::vector<double> readout = uniform(rng, h * w * cout, -1, 1);

  const Tensor<double> d_out({h, w, cout}, readout);
  const Conv2dGrads<double> g = conv2d_grads(in, kern, d_out);
  GradCheckReport report;
  auto objective = [&] { return dot(conv2d(in, kern, bias).data, readout); };
  auto pattern = [] { return std::uint64_t{0}; };
  sweep(report, epsilon,
        {{"input", {&in.data, &g.input.data}},
         {"kernels", {&kern.data, &g.kernels.data}},
         {"bias", {&bias.data, &g.bias.data}}},
        objective, pattern);
  return report;
}

GradCheckReport check_maxpool2(std::uint64_t seed, double epsilon) {
  Rng rng(derive_seed(seed, "check.maxpool2"));
  const std::size_t h = 6, w = 8, c = 3;
  Tensor<double> in({h, w, c}, uniform(rng, h * w * c, -1, 1));
  const std::vector<double> readout = uniform(rng, (h / 2) * (w / 2) * c, -1, 1);
  const MaxPoolResult<double> base = maxpool2(in);
  const Tensor<double> d_in = maxpool2_grads(in.shape, base.argmax, Tensor<double>(base.output.shape, readout));

  GradCheckReport report;
  std::vector<std::uint32_t> argmax;
  auto objective = [&] {
    MaxPoolResult<double> r = maxpool2(in);
    argmax = r.argmax;
    return dot(r.output.data, readout);
  };
  auto pattern = [&] { return hash_indices(argmax); };
  sweep(report, epsilon, {{"input", {&in.data, &d_in.data}}}, objective, pattern);
  return report;
}

GradCheckReport check_dense(std::uint64_t seed, Activation activation, double epsilon) {
  Rng rng(derive_seed(seed, "check.dense"));
  const std::size_t n = 7, m = 5;
  Tensor<double> in({n}, uniform(rng, n, -1, 1));
  Tensor<double> weights({n, m}, uniform(rng, n * m, -1, 1));
  Tensor<double> bias({m}, uniform(rng, m, -1, 1));
  const std::vector<double> readout = uniform(rng, m, -1, 1);
  const DenseGrads<double> g = dense_grads(in, weights, bias, activation, Tensor<double>({m}, readout));

  GradCheckReport report;
  std::vector<double> out;
  auto objective = [&] {
    out = dense(in, weights, bias, activation).data;
    return dot(out, readout);
  };
  auto pattern = [&] { return activation == Activation::kRelu ? hash_mask(out) : std::uint64_t{0}; };
  sweep(report, epsilon,
        {{"input", {&in.data, &g.input.data}},
         {"weights", {&weights.data, &g.weights.data}},
         {"bias", {&bias.data, &g.bias.data}}},
        objective, pattern);
  return report;
}

GradCheckReport check_lstm(std::uint64_t seed, std::size_t steps, double epsilon) {
  Rng rng(derive_seed(seed, "check.lstm"));
  const std::size_t d = 4, m = 3;
  std::vector<Tensor<double>> inputs;
  for (std::size_t t = 0; t < steps; ++t) inputs.emplace_back(Shape{d}, uniform(rng, d, -1, 1));
  LstmParams<double> p{Tensor<double>({d, 4 * m}, uniform(rng, d * 4 * m, -1, 1)),
                       Tensor<double>({m, 4 * m}, uniform(rng, m * 4 * m, -1, 1)),
                       Tensor<double>({4 * m}, uniform(rng, 4 * m, -1, 1))};
  const std::vector<double> readout = uniform(rng, m, -1, 1);
  const LstmSequenceGrads<double> g = lstm_sequence_grads(inputs, p, Tensor<double>({m}, readout));

  GradCheckReport report;
  auto objective = [&] { return dot(lstm_sequence(inputs, p).h.data, readout); };
  auto pattern = [] { return std::uint64_t{0}; };
  std::vector<std::pair<std::string, std::pair<std::vector<double>*, const std::vector<double>*>>> targets = {
      {"w_x", {&p.w_x.data, &g.params.w_x.data}},
      {"w_h", {&p.w_h.data, &g.params.w_h.data}},
      {"bias", {&p.bias.data, &g.params.bias.data}}};
  for (std::size_t t = 0; t < steps; ++t) {
    targets.push_back({"x" + std::to_string(t), {&inputs[t].data, &g.inputs[t].data}});
  }
  sweep(report, epsilon, targets, objective, pattern);
  return report;
}

}  // namespace stimkit::nn
