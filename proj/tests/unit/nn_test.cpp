// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <vector>

#include "gtest/gtest.h"
#include "stimkit/error.hpp"
#include "stimkit/nn/checkpoint.hpp"
#include "stimkit/nn/grad_check.hpp"
#include "stimkit/nn/layers.hpp"
#include "stimkit/nn/model.hpp"
#include "stimkit/nn/train.hpp"
#include "test_util.hpp"

namespace stimkit::nn {
namespace {

template <typename F>
ErrorKind kind_of(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no stimkit::Error thrown";
  return ErrorKind::kIo;
}

Tensor<double> random_tensor(Shape shape, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor<double> t(std::move(shape));
  for (auto& v : t.data) v = u(rng);
  return t;
}

pose::RasterClip constant_clip(const ModelConfig& c, float value) {
  pose::RasterClip clip;
  clip.length = static_cast<int>(c.length);
  clip.height = static_cast<int>(c.height);
  clip.width = static_cast<int>(c.width);
  clip.data.assign(c.length * c.height * c.width, value);
  clip.label = pose::Label::kPositive;
  return clip;
}

// ---- conv2d ----------------------------------------------------------------

TEST(Conv2d, UnitKernelIsIdentity) {
  const Tensor<double> in = random_tensor({5, 6, 3}, 1);
  Tensor<double> k({1, 1, 3, 3});
  for (std::size_t c = 0; c < 3; ++c) k[c * 3 + c] = 1.0;
  EXPECT_EQ(conv2d(in, k, Tensor<double>({3})), in);
}

TEST(Conv2d, OnesKernelOnConstantImage) {
  const double c = 2.5;
  const Tensor<double> in({6, 7, 1}, c);
  const Tensor<double> out = conv2d(in, Tensor<double>({3, 3, 1, 1}, 1.0), Tensor<double>({1}));
  EXPECT_EQ(out[2 * 7 + 3], 9 * c);
  EXPECT_EQ(out[0], 4 * c);
  EXPECT_EQ(out[6 * 7 - 1], 4 * c);
  EXPECT_EQ(out[3], 6 * c);  // top edge
}

TEST(Conv2d, ChannelMismatchIsShapeError) {
  EXPECT_EQ(kind_of([] { conv2d(Tensor<double>({4, 4, 2}), Tensor<double>({3, 3, 1, 2}), Tensor<double>({2})); }),
            ErrorKind::kShape);
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const GradCheckReport r = check_conv2d(seed);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
    EXPECT_GT(r.checked, 0u);
  }
}

// ---- maxpool2 --------------------------------------------------------------

TEST(MaxPool, ConstantStaysConstant) {
  const MaxPoolResult<double> r = maxpool2(Tensor<double>({4, 6, 2}, 3.0));
  EXPECT_EQ(r.output, Tensor<double>({2, 3, 2}, 3.0));
}

TEST(MaxPool, PicksBlockMaxAndFirstOnTies) {
  const MaxPoolResult<double> r = maxpool2(Tensor<double>({2, 2, 1}, {1, 2, 3, 4}));
  EXPECT_EQ(r.output[0], 4.0);
  EXPECT_EQ(r.argmax[0], 3u);
  const MaxPoolResult<double> tie = maxpool2(Tensor<double>({2, 2, 1}, {5, 5, 5, 5}));
  EXPECT_EQ(tie.argmax[0], 0u);
  const Tensor<double> d = maxpool2_grads<double>({2, 2, 1}, tie.argmax, Tensor<double>({1, 1, 1}, 7.0));
  EXPECT_EQ(d.data, (std::vector<double>{7, 0, 0, 0}));
}

TEST(MaxPool, OddDimsAreShapeError) {
  EXPECT_EQ(kind_of([] { maxpool2(Tensor<double>({3, 4, 1})); }), ErrorKind::kShape);
}

TEST(MaxPool, GradientsMatchFiniteDifferences) {
  const GradCheckReport r = check_maxpool2(4);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

// ---- dense -----------------------------------------------------------------

TEST(Dense, IdentityPassthrough) {
  const Tensor<double> x = random_tensor({4}, 5);
  Tensor<double> w({4, 4});
  for (std::size_t i = 0; i < 4; ++i) w[i * 4 + i] = 1.0;
  EXPECT_EQ(dense(x, w, Tensor<double>({4}), Activation::kNone), x);
}

TEST(Dense, SigmoidAtZeroIsHalf) {
  const Tensor<double> out = dense(Tensor<double>({3}, 1.0), Tensor<double>({3, 2}), Tensor<double>({2}),
                                   Activation::kSigmoid);
  EXPECT_EQ(out.data, (std::vector<double>{0.5, 0.5}));
  EXPECT_EQ(sigmoid(0.0f), 0.5f);
}

TEST(Dense, ShapeMismatch) {
  EXPECT_EQ(kind_of([] { dense(Tensor<double>({3}), Tensor<double>({4, 2}), Tensor<double>({2}), Activation::kNone); }),
            ErrorKind::kShape);
}

TEST(Dense, GradientsMatchFiniteDifferences) {
  for (Activation a : {Activation::kNone, Activation::kRelu, Activation::kSigmoid}) {
    const GradCheckReport r = check_dense(6, a);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  }
}

// ---- LSTM ------------------------------------------------------------------

LstmParams<double> zero_lstm(std::size_t d, std::size_t m) {
  return {Tensor<double>({d, 4 * m}), Tensor<double>({m, 4 * m}), Tensor<double>({4 * m})};
}

TEST(Lstm, ZeroEverythingGivesZeroState) {
  const LstmState<double> s = lstm_step(Tensor<double>({3}), Tensor<double>({2}), Tensor<double>({2}), zero_lstm(3, 2));
  EXPECT_EQ(s.h, Tensor<double>({2}));
  EXPECT_EQ(s.c, Tensor<double>({2}));
}

TEST(Lstm, ForgetGateOnlyClosedForm) {
  LstmParams<double> p = zero_lstm(3, 2);
  const double bf = 0.7;
  p.bias[2 + 0] = bf;  // forget block follows the input block
  p.bias[2 + 1] = bf;
  const LstmState<double> s =
      lstm_step(random_tensor({3}, 7), random_tensor({2}, 8), Tensor<double>({2}, 1.0), p);
  const double f = 1.0 / (1.0 + std::exp(-bf));
  EXPECT_NEAR(s.c[0], f, 1e-15);
  EXPECT_NEAR(s.c[1], f, 1e-15);
  EXPECT_NEAR(s.h[0], 0.5 * std::tanh(f), 1e-15);
}

TEST(Lstm, BackpropThroughTimeMatchesFiniteDifferences) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const GradCheckReport r = check_lstm(seed, 3);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
  }
}

TEST(Lstm, ShapeMismatch) {
  EXPECT_EQ(kind_of([] { lstm_step(Tensor<double>({4}), Tensor<double>({2}), Tensor<double>({2}), zero_lstm(3, 2)); }),
            ErrorKind::kShape);
}

// ---- model -----------------------------------------------------------------

TEST(Model, ZeroOutputWeightsGiveHalf) {
  const ModelConfig c = micro_config(3);
  Model<float> m(c);
  m.initialize(3);
  for (float& v : m.parameter("out.weight")) v = 0.0f;
  std::mt19937_64 rng(1);
  for (int i = 0; i < 5; ++i) {
    const pose::RasterClip clip = random_sample(c, rng(), pose::Label::kNegative);
    const float p = m.predict(clip);
    EXPECT_EQ(p, 0.5f);
    EXPECT_FALSE(classify(p));
  }
}

TEST(Model, ConstantClipIsReversalInvariant) {
  const ModelConfig c = micro_config(4);
  Model<float> m(c);
  m.initialize(4);
  pose::RasterClip clip = random_sample(c, 9, pose::Label::kPositive);
  for (std::size_t t = 1; t < c.length; ++t) {
    std::copy(clip.data.begin(), clip.data.begin() + static_cast<long>(clip.frame_pixels()),
              clip.data.begin() + static_cast<long>(t * clip.frame_pixels()));
  }
  pose::RasterClip reversed = clip;
  for (std::size_t t = 0; t < c.length; ++t) {
    const auto src = clip.frame(static_cast<int>(c.length - 1 - t));
    std::copy(src.begin(), src.end(), reversed.data.begin() + static_cast<long>(t * clip.frame_pixels()));
  }
  EXPECT_EQ(m.predict(clip), m.predict(reversed));
}

TEST(Model, ParameterCountIndependentOfLength) {
  ModelConfig c;
  const std::size_t n7 = Model<float>(c).parameters().size();
  c.length = 30;
  EXPECT_EQ(Model<float>(c).parameters().size(), n7);
}

TEST(Model, DefaultLayout) {
  const std::vector<ParamSlot> slots = parameter_layout(ModelConfig{});
  ASSERT_EQ(slots.size(), 11u);
  EXPECT_EQ(slots[0].shape, (Shape{3, 3, 1, 16}));
  EXPECT_EQ(slots[2].shape, (Shape{3, 3, 16, 32}));
  EXPECT_EQ(slots[4].shape, (Shape{16 * 16 * 32, 64}));
  EXPECT_EQ(slots[6].shape, (Shape{64, 128}));
  EXPECT_EQ(slots[7].shape, (Shape{32, 128}));
}

TEST(Model, ForgetBiasStartsAtOne) {
  Model<float> m(micro_config(2));
  m.initialize(2);
  const auto b = m.parameter("lstm.bias");
  const std::size_t h = m.config().lstm_hidden;
  for (std::size_t j = 0; j < 4 * h; ++j) EXPECT_EQ(b[j], (j >= h && j < 2 * h) ? 1.0f : 0.0f);
}

TEST(Model, OutputInOpenIntervalForRandomParameters) {
  const ModelConfig c = micro_config(5);
  std::mt19937_64 rng(11);
  std::normal_distribution<float> big(0.0f, 3.0f);
  for (int trial = 0; trial < 30; ++trial) {
    Model<float> m(c);
    for (float& v : m.parameters()) v = big(rng);
    const float p = m.predict(random_sample(c, rng(), pose::Label::kPositive));
    EXPECT_TRUE(std::isfinite(p));
    EXPECT_GE(p, 0.0f);
    EXPECT_LE(p, 1.0f);
  }
  Model<double> md(c);
  md.initialize(5);
  for (int trial = 0; trial < 10; ++trial) {
    Workspace<double> ws;
    const double p = md.forward(random_sample(c, rng(), pose::Label::kPositive), ws);
    EXPECT_GT(p, 0.0);
    EXPECT_LT(p, 1.0);
  }
}

TEST(Model, DimensionMismatchIsShapeError) {
  const ModelConfig c = micro_config(1);
  Model<float> m(c);
  pose::RasterClip clip = constant_clip(c, 0.0f);
  clip.width = 16;
  clip.data.resize(c.length * c.height * 16);
  EXPECT_EQ(kind_of([&] { m.predict(clip); }), ErrorKind::kShape);
}

TEST(ModelConfig, Validation) {
  ModelConfig c;
  c.length = 1;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kConfig);
  c = {};
  c.width = 62;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kConfig);
  c = {};
  c.lstm_hidden = 0;
  EXPECT_EQ(kind_of([&] { c.validate(); }), ErrorKind::kConfig);
}

// ---- loss ------------------------------------------------------------------

TEST(Loss, ClosedForms) {
  EXPECT_NEAR(bce_loss(0.5, 1).loss, std::log(2.0), 1e-15);
  EXPECT_LT(bce_loss(1.0 - 1e-9, 1).loss, 1e-6);
  EXPECT_TRUE(std::isfinite(bce_loss(0.0, 1).loss));
  EXPECT_NEAR(bce_loss(0.0, 1).loss, -std::log(kProbabilityClip), 1e-9);
  for (double p : {0.01, 0.3, 0.5, 0.77, 0.999}) {
    EXPECT_NEAR(bce_loss(p, 1).loss, bce_loss(1.0 - p, 0).loss, 1e-12);
    const double h = 1e-6;
    const double fd = (bce_loss(p + h, 1).loss - bce_loss(p - h, 1).loss) / (2 * h);
    EXPECT_NEAR(bce_loss(p, 1).d_probability, fd, 1e-4 * std::abs(fd));
  }
}

TEST(Classify, TieIsNegative) {
  EXPECT_FALSE(classify(0.5));
  EXPECT_TRUE(classify(std::nextafter(0.5, 1.0)));
}

// ---- Adam ------------------------------------------------------------------

TEST(Adam, FirstStepMovesByLearningRate) {
  TrainConfig tc;
  std::vector<double> p(6, 1.0);
  const std::vector<double> g{0.5, -0.5, 3.0, -7.0, 1e-3, 100.0};
  AdamState<double> s(6);
  adam_step<double>(p, g, s, tc);
  EXPECT_EQ(s.step, 1u);
  for (std::size_t i = 0; i < 6; ++i) {
    const double expected = 1.0 - tc.learning_rate * (g[i] > 0 ? 1 : -1) * std::abs(g[i]) / (std::abs(g[i]) + tc.epsilon);
    EXPECT_NEAR(p[i], expected, 1e-12);
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<float> p{1.0f, -2.0f, 3.5f};
  const std::vector<float> before = p;
  const std::vector<float> g(3, 0.0f);
  AdamState<float> s(3);
  for (int i = 0; i < 100; ++i) adam_step<float>(p, g, s, TrainConfig{});
  EXPECT_EQ(p, before);
}

TEST(Adam, DeterministicAndShapeChecked) {
  auto run = [] {
    std::mt19937_64 rng(3);
    std::normal_distribution<float> n;
    std::vector<float> p(37, 0.5f), g(37);
    AdamState<float> s(37);
    for (int i = 0; i < 50; ++i) {
      for (float& v : g) v = n(rng);
      adam_step<float>(p, g, s, TrainConfig{});
    }
    return p;
  };
  EXPECT_EQ(run(), run());
  std::vector<float> p(3), g(4);
  AdamState<float> s(3);
  EXPECT_EQ(kind_of([&] { adam_step<float>(p, g, s, TrainConfig{}); }), ErrorKind::kShape);
}

TEST(TrainConfig, Validation) {
  TrainConfig t;
  t.learning_rate = 0.0;
  EXPECT_EQ(kind_of([&] { t.validate(); }), ErrorKind::kConfig);
  t = {};
  t.beta2 = 1.0;
  EXPECT_EQ(kind_of([&] { t.validate(); }), ErrorKind::kConfig);
}

// ---- training --------------------------------------------------------------

std::vector<pose::RasterClip> separable_set(const ModelConfig& c, std::size_t n) {
  // Positives light the top half of the first frame, negatives the bottom.
  std::vector<pose::RasterClip> clips;
  std::mt19937_64 rng(21);
  std::bernoulli_distribution speck(0.05);
  for (std::size_t i = 0; i < n; ++i) {
    pose::RasterClip clip = constant_clip(c, 0.0f);
    clip.label = i % 2 ? pose::Label::kPositive : pose::Label::kNegative;
    for (std::size_t t = 0; t < c.length; ++t) {
      for (std::size_t y = 0; y < c.height; ++y) {
        for (std::size_t x = 0; x < c.width; ++x) {
          const bool top = y < c.height / 2;
          float v = (top == (clip.label == pose::Label::kPositive)) ? 1.0f : 0.0f;
          if (speck(rng)) v = 1.0f - v;
          clip.data[(t * c.height + y) * c.width + x] = v;
        }
      }
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

TEST(Train, LossDecreasesOnSeparableSet) {
  const ModelConfig c = micro_config(7);
  TrainConfig tc;
  tc.learning_rate = 1e-3;
  tc.epochs = 30;
  tc.seed = 7;
  tc.threads = 1;
  const TrainResult r = train(c, separable_set(c, 20), tc);
  ASSERT_EQ(r.history.size(), 30u);
  EXPECT_LT(r.history.back(), r.history.front());
}

TEST(Train, ZeroEpochsReturnsInitialization) {
  const ModelConfig c = micro_config(8);
  TrainConfig tc;
  tc.epochs = 0;
  const TrainResult r = train(c, separable_set(c, 4), tc);
  Model<float> init(c);
  init.initialize(c.seed);
  EXPECT_TRUE(std::equal(init.parameters().begin(), init.parameters().end(), r.model.parameters().begin(),
                         r.model.parameters().end()));
  EXPECT_TRUE(r.history.empty());
}

TEST(Train, SameSeedSameHistoryAnyThreadCount) {
  const ModelConfig c = micro_config(9);
  const auto data = separable_set(c, 12);
  TrainConfig tc;
  tc.epochs = 4;
  tc.batch_size = 5;
  tc.seed = 9;
  tc.threads = 1;
  const TrainResult a = train(c, data, tc);
  tc.threads = 3;
  const TrainResult b = train(c, data, tc);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(serialize_checkpoint(ModelCheckpoint::from_model(a.model)),
            serialize_checkpoint(ModelCheckpoint::from_model(b.model)));
}

TEST(Train, SingleClassIsConfigError) {
  const ModelConfig c = micro_config(1);
  auto data = separable_set(c, 4);
  for (auto& clip : data) clip.label = pose::Label::kPositive;
  EXPECT_EQ(kind_of([&] { train(c, data, TrainConfig{}); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { train(c, std::vector<pose::RasterClip>{}, TrainConfig{}); }), ErrorKind::kConfig);
}

// ---- checkpoint ------------------------------------------------------------

TEST(Checkpoint, RoundTripsBitExactly) {
  ModelConfig c = micro_config(12);
  Model<float> m(c);
  m.initialize(12);
  m.parameters()[0] = std::nextafter(0.1f, 1.0f);
  m.parameters()[1] = -0.0f;
  m.parameters()[2] = 1e-40f;  // subnormal
  ModelCheckpoint ck = ModelCheckpoint::from_model(m, {3, 0.25, 12});
  ck.preprocess = {{"window", {{"length", 2}}}};
  const std::string bytes = serialize_checkpoint(ck);
  const ModelCheckpoint back = parse_checkpoint(bytes);
  EXPECT_EQ(back, ck);
  EXPECT_EQ(serialize_checkpoint(back), bytes);
  EXPECT_TRUE(std::signbit(back.to_model().parameters()[1]));

  test::TempDir dir;
  save_checkpoint(ck, dir.path() / "m.ckpt");
  EXPECT_EQ(test::slurp(dir.path() / "m.ckpt"), bytes);
  const Model<float> loaded = load_checkpoint(dir.path() / "m.ckpt").to_model();
  const pose::RasterClip clip = random_sample(c, 4, pose::Label::kPositive);
  const float p0 = m.predict(clip), p1 = loaded.predict(clip);
  EXPECT_EQ(std::memcmp(&p0, &p1, sizeof p0), 0);
}

TEST(Checkpoint, ByteLayoutHeader) {
  Model<float> m(micro_config(1));
  m.initialize(1);
  const std::string bytes = serialize_checkpoint(ModelCheckpoint::from_model(m));
  ASSERT_GT(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 8), "STIMKIT1");
  std::uint64_t n = 0;
  for (int i = 7; i >= 0; --i) n = (n << 8) | static_cast<unsigned char>(bytes[8 + static_cast<std::size_t>(i)]);
  const auto header = nlohmann::json::parse(bytes.substr(16, n));
  EXPECT_EQ(header["format_version"], 1);
  EXPECT_EQ(bytes.size(), 16 + n + 4 * m.parameters().size());
  // First payload float is the first conv weight, little-endian.
  float first = 0;
  std::memcpy(&first, bytes.data() + 16 + n, 4);
  EXPECT_EQ(first, m.parameters()[0]);
}

TEST(Checkpoint, CorruptInputsAreRejected) {
  Model<float> m(micro_config(1));
  const std::string good = serialize_checkpoint(ModelCheckpoint::from_model(m));
  EXPECT_EQ(kind_of([&] { parse_checkpoint("NOTMAGIC" + good.substr(8)); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { parse_checkpoint(good.substr(0, 20)); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([&] { parse_checkpoint(good.substr(0, good.size() - 4)); }), ErrorKind::kFormat);
  EXPECT_EQ(kind_of([] { load_checkpoint("/nonexistent/x.ckpt"); }), ErrorKind::kIo);
}

// ---- gradient check harness -----------------------------------------------

TEST(GradCheck, MicroModelEndToEnd) {
  const ModelConfig c = micro_config(1);
  for (std::uint64_t seed = 1; seed <= 2; ++seed) {
    for (pose::Label label : {pose::Label::kPositive, pose::Label::kNegative}) {
      const GradCheckReport r = grad_check(c, random_sample(c, seed, label));
      EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
      EXPECT_EQ(r.checked + r.skipped_kinks, Model<double>(c).parameters().size());
      EXPECT_LT(r.skipped_kinks, r.checked / 20 + 1);
    }
  }
}

TEST(GradCheck, CorruptedConvGradientIsDetected) {
  const ModelConfig c = micro_config(1);
  GradCheckOptions o;
  o.conv_grad_scale = 2.0;
  const GradCheckReport r = grad_check(c, random_sample(c, 1, pose::Label::kPositive), o);
  EXPECT_GT(r.max_rel_error, 0.3);
  EXPECT_NE(r.worst.find("conv"), std::string::npos);
}

TEST(GradCheck, ZeroParametersStayFinite) {
  const Model<double> zero(micro_config(1));
  const GradCheckReport r = grad_check(zero, random_sample(zero.config(), 2, pose::Label::kPositive));
  EXPECT_TRUE(std::isfinite(r.max_rel_error));
}

}  // namespace
}  // namespace stimkit::nn
