// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>

#include "gtest/gtest.h"
#include "stimkit/error.hpp"
#include "stimkit/flow/image.hpp"
#include "stimkit/flow/optical_flow.hpp"
#include "stimkit/flow/render.hpp"
#include "test_util.hpp"

namespace stimkit::flow {
namespace {

// Two crossing sinusoids: textured in both directions everywhere.
double texture(double x, double y) {
  return 0.5 + 0.2 * std::sin(0.55 * x + 0.2 * y) + 0.2 * std::sin(-0.25 * x + 0.6 * y + 1.0);
}

GrayImage textured(int w, int h, double dx = 0.0, double dy = 0.0) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) img.at(x, y) = static_cast<float>(texture(x - dx, y - dy));
  }
  return img;
}

GrayImage blob(int w, int h, double cx, double cy, double sigma) {
  GrayImage img(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      img.at(x, y) = static_cast<float>(std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma)));
    }
  }
  return img;
}

// Fraction of valid points within `tol` px of (du, dv).
double recovered_fraction(const FlowField& f, double du, double dv, double tol) {
  std::size_t ok = 0, valid = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.valid[i]) continue;
    ++valid;
    ok += std::hypot(f.vectors[i].u - du, f.vectors[i].v - dv) <= tol;
  }
  return valid ? static_cast<double>(ok) / static_cast<double>(valid) : 0.0;
}

double median_magnitude(const FlowField& f) {
  std::vector<double> m;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.valid[i]) m.push_back(std::hypot(f.vectors[i].u, f.vectors[i].v));
  }
  std::nth_element(m.begin(), m.begin() + static_cast<std::ptrdiff_t>(m.size() / 2), m.end());
  return m[m.size() / 2];
}

TEST(Gradients, ConstantImageIsFlat) {
  const auto [ix, iy] = image_gradients(GrayImage(12, 9, 0.4f));
  for (float v : ix.data) EXPECT_EQ(v, 0.0f);
  for (float v : iy.data) EXPECT_EQ(v, 0.0f);
}

TEST(Gradients, RampHasConstantSlope) {
  GrayImage img(20, 10);
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) img.at(x, y) = static_cast<float>(x) / 20.0f;
  }
  const auto [ix, iy] = image_gradients(img);
  for (int y = 0; y < 10; ++y) {
    for (int x = 1; x < 19; ++x) EXPECT_NEAR(ix.at(x, y), 1.0 / 20.0, 1e-6);
    for (int x = 0; x < 20; ++x) EXPECT_EQ(iy.at(x, y), 0.0f);
  }
}

TEST(Gradients, TransposeSwapsComponents) {
  const GrayImage img = textured(17, 11);
  const auto [ix, iy] = image_gradients(img);
  const auto [tx, ty] = image_gradients(transpose(img));
  EXPECT_EQ(tx, transpose(iy));
  EXPECT_EQ(ty, transpose(ix));
}

TEST(Gradients, TooSmallIsSizeError) {
  try {
    image_gradients(GrayImage(2, 5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kSize);
  }
}

TEST(LucasKanade, LatticeCountFormula) {
  for (auto [w, h, s] : {std::tuple{100, 100, 10}, {101, 57, 10}, {64, 48, 7}, {33, 20, 1}}) {
    const GrayImage img = textured(w, h);
    LucasKanadeParams p;
    p.spacing = s;
    const FlowField f = lucas_kanade_grid(img, img, p);
    EXPECT_EQ(f.size(), static_cast<std::size_t>(((w - 1) / s + 1) * ((h - 1) / s + 1)));
    EXPECT_EQ(f.grid_cols * f.grid_rows, static_cast<int>(f.size()));
  }
}

TEST(LucasKanade, IdenticalFramesGiveZero) {
  const GrayImage img = textured(100, 100);
  const FlowField f = lucas_kanade_grid(img, img);
  EXPECT_EQ(f.valid_count(), f.size());
  for (const FlowVector& v : f.vectors) {
    EXPECT_EQ(v.u, 0.0f);
    EXPECT_EQ(v.v, 0.0f);
  }
}

TEST(LucasKanade, FlatFramesAreInvalid) {
  const GrayImage black(60, 40, 0.0f);
  EXPECT_EQ(lucas_kanade_grid(black, black).valid_count(), 0u);
}

TEST(LucasKanade, BlobShift) {
  const FlowField f = lucas_kanade_grid(blob(100, 100, 50, 50, 6), blob(100, 100, 51, 50, 6));
  int near = 0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.valid[i] || std::hypot(f.points[i].x - 50, f.points[i].y - 50) > 10) continue;
    ++near;
    EXPECT_GE(f.vectors[i].u, 0.7);
    EXPECT_LE(f.vectors[i].u, 1.3);
    EXPECT_GE(f.vectors[i].v, -0.3);
    EXPECT_LE(f.vectors[i].v, 0.3);
  }
  EXPECT_GT(near, 0);
}

TEST(LucasKanade, SizeMismatch) {
  EXPECT_THROW(lucas_kanade_grid(GrayImage(20, 20), GrayImage(21, 20)), Error);
}

TEST(Farneback, IdenticalFramesGiveZero) {
  const GrayImage img = textured(64, 48);
  const FlowField f = farneback_dense(img, img);
  EXPECT_EQ(f.size(), 64u * 48u);
  EXPECT_GT(f.valid_count(), f.size() * 9 / 10);
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!f.valid[i]) continue;
    EXPECT_LE(std::abs(f.vectors[i].u), 1e-6);
    EXPECT_LE(std::abs(f.vectors[i].v), 1e-6);
  }
}

TEST(Farneback, ConstantFramesAreInvalid) {
  const GrayImage flat(32, 32, 0.3f);
  EXPECT_EQ(farneback_dense(flat, flat).valid_count(), 0u);
}

TEST(Farneback, PointsEnumerateEveryPixel) {
  const FlowField f = farneback_dense(textured(20, 16), textured(20, 16, 1, 0));
  ASSERT_EQ(f.size(), 320u);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 20; ++x) {
      EXPECT_EQ(f.points[y * 20 + x].x, x);
      EXPECT_EQ(f.points[y * 20 + x].y, y);
    }
  }
}

TEST(Farneback, TooSmallOrMismatched) {
  EXPECT_THROW(farneback_dense(GrayImage(8, 8), GrayImage(8, 8)), Error);
  EXPECT_THROW(farneback_dense(GrayImage(20, 20), GrayImage(20, 21)), Error);
}

TEST(ShiftRecovery, BothMethodsIntegerShifts) {
  for (auto [dx, dy] : {std::pair{2, 1}, {1, 0}, {0, -2}, {-3, 1}, {3, 3}}) {
    const GrayImage a = textured(100, 100);
    const GrayImage b = textured(100, 100, dx, dy);
    EXPECT_GE(recovered_fraction(lucas_kanade_grid(a, b), dx, dy, 0.5), 0.8) << "lk " << dx << "," << dy;
    EXPECT_GE(recovered_fraction(farneback_dense(a, b), dx, dy, 0.5), 0.8) << "dense " << dx << "," << dy;
  }
}

TEST(ShiftRecovery, DoublingShiftDoublesMagnitude) {
  const GrayImage a = textured(100, 100);
  const GrayImage one = textured(100, 100, 1, 0);
  const GrayImage two = textured(100, 100, 2, 0);
  EXPECT_GE(median_magnitude(lucas_kanade_grid(a, two)), 2 * median_magnitude(lucas_kanade_grid(a, one)) - 0.3);
  EXPECT_GE(median_magnitude(farneback_dense(a, two)), 2 * median_magnitude(farneback_dense(a, one)) - 0.3);
}

FlowField dense_field(int w, int h, std::vector<FlowVector> vectors) {
  FlowField f;
  f.kind = FlowKind::kDense;
  f.width = w;
  f.height = h;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f.points.push_back({static_cast<float>(x), static_cast<float>(y)});
  }
  f.vectors = std::move(vectors);
  f.valid.assign(f.vectors.size(), 1);
  return f;
}

TEST(FlowHsv, ZeroVectorIsBlack) {
  const HsvImage hsv = flow_to_hsv(dense_field(2, 1, {{0, 0}, {1, 0}}));
  EXPECT_EQ(hsv.pixels[0].value, 0.0);
  const RgbImage rgb = hsv_to_rgb(hsv);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(rgb.channel(0, 0, c), 0);
}

TEST(FlowHsv, RightwardAtMaxIsFullRed) {
  const HsvImage hsv = flow_to_hsv(dense_field(1, 1, {{3, 0}}), 3.0);
  EXPECT_EQ(hsv.pixels[0].hue, 0.0);
  EXPECT_EQ(hsv.pixels[0].value, 1.0);
  const RgbImage rgb = hsv_to_rgb(hsv);
  EXPECT_EQ(rgb.channel(0, 0, 0), 255);
  EXPECT_EQ(rgb.channel(0, 0, 1), 0);
  EXPECT_EQ(rgb.channel(0, 0, 2), 0);
}

TEST(FlowHsv, InvalidIsBlack) {
  FlowField f = dense_field(1, 1, {{2, 2}});
  f.valid[0] = 0;
  EXPECT_EQ(flow_to_hsv(f, 1.0).pixels[0].value, 0.0);
}

TEST(FlowHsv, QuarterTurnRotatesHues) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<float> u(-5.0f, 5.0f);
  std::vector<FlowVector> v(400), r(400);
  for (std::size_t i = 0; i < v.size(); ++i) {
    v[i] = {u(rng), u(rng)};
    r[i] = {-v[i].v, v[i].u};  // exact 90 degree rotation
  }
  const HsvImage a = flow_to_hsv(dense_field(20, 20, v));
  const HsvImage b = flow_to_hsv(dense_field(20, 20, r));
  std::vector<int> hist_a(36), hist_b(36);
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double diff = std::fmod(b.pixels[i].hue - a.pixels[i].hue + 360.0, 360.0);
    EXPECT_NEAR(diff, 90.0, 1e-9);
    ++hist_a[static_cast<int>(std::fmod(a.pixels[i].hue + 90.0, 360.0) / 10.0)];
    ++hist_b[static_cast<int>(b.pixels[i].hue / 10.0)];
  }
  int mismatch = 0;
  for (int k = 0; k < 36; ++k) mismatch += std::abs(hist_a[k] - hist_b[k]);
  EXPECT_LE(mismatch, 4);  // bins can differ only through rounding at edges
}

TEST(FlowHsv, OppositeVectorsDifferByHalfTurn) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng), b = u(rng);
    const double d = std::fmod(flow_hue(-a, -b) - flow_hue(a, b) + 360.0, 360.0);
    EXPECT_EQ(d, 180.0) << a << "," << b;
  }
}

TEST(FlowHsv, NeverNan) {
  const float inf = std::numeric_limits<float>::infinity();
  const float nan = std::numeric_limits<float>::quiet_NaN();
  const HsvImage hsv = flow_to_hsv(dense_field(5, 1, {{0, 0}, {nan, 1}, {inf, 0}, {1e-30f, 0}, {-2, 3}}));
  for (const Hsv& p : hsv.pixels) {
    EXPECT_TRUE(std::isfinite(p.hue) && std::isfinite(p.value) && std::isfinite(p.saturation));
    EXPECT_GE(p.hue, 0.0);
    EXPECT_LT(p.hue, 360.0);
  }
}

FlowField grid_field(int w, int h, int spacing, FlowVector v) {
  FlowField f;
  f.kind = FlowKind::kSparseGrid;
  f.width = w;
  f.height = h;
  for (int y = 0; y < h; y += spacing) {
    for (int x = 0; x < w; x += spacing) {
      f.points.push_back({static_cast<float>(x), static_cast<float>(y)});
      f.vectors.push_back(v);
      f.valid.push_back(1);
    }
  }
  f.grid_cols = (w - 1) / spacing + 1;
  f.grid_rows = (h - 1) / spacing + 1;
  return f;
}

bool is_black(const RgbImage& img, int x, int y) {
  return img.channel(x, y, 0) == 0 && img.channel(x, y, 1) == 0 && img.channel(x, y, 2) == 0;
}

TEST(Arrows, ZeroFlowDrawsDotsOnly) {
  const RgbImage img = render_arrows(grid_field(100, 100, 10, {0, 0}), nullptr);
  int lit = 0;
  for (int y = 0; y < 100; ++y) {
    for (int x = 0; x < 100; ++x) {
      if (is_black(img, x, y)) continue;
      ++lit;
      EXPECT_TRUE(x % 10 == 0 && y % 10 == 0);
    }
  }
  EXPECT_EQ(lit, 100);
}

TEST(Arrows, UniformFlowGivesEqualSegments) {
  const RgbImage img = render_arrows(grid_field(100, 60, 20, {5, 0}), nullptr);
  for (int y = 0; y < 60; y += 20) {
    for (int x0 = 0; x0 < 100; x0 += 20) {
      int run = 0;
      for (int x = x0 + 1; x < std::min(100, x0 + 20); ++x) run += !is_black(img, x, y);
      EXPECT_EQ(run, x0 + 5 < 100 ? 5 : 99 - x0);
    }
    for (int x = 0; x < 100; ++x) {
      if (y + 1 < 60) EXPECT_TRUE(is_black(img, x, y + 1));
    }
  }
}

TEST(Arrows, IsolationWithEmptyFlowIsBlack) {
  FlowField f = grid_field(40, 30, 10, {1, 1});
  std::fill(f.valid.begin(), f.valid.end(), 0);
  const RgbImage img = render_arrows(f, nullptr);
  for (std::uint8_t v : img.data) EXPECT_EQ(v, 0);
}

TEST(Arrows, BackgroundShowsThrough) {
  const GrayImage bg(30, 20, 0.5f);
  const RgbImage img = render_arrows(grid_field(30, 20, 10, {0, 0}), &bg);
  EXPECT_EQ(img.channel(5, 5, 0), 128);
  EXPECT_EQ(img.channel(5, 5, 1), 128);
}

TEST(ImageIo, PgmRoundTrip) {
  test::TempDir dir;
  GrayImage img(7, 5);
  for (int i = 0; i < 35; ++i) img.data[i] = static_cast<float>(i * 7 % 256) / 255.0f;
  write_pgm(img, dir.path() / "a.pgm");
  const GrayImage back = read_gray_image(dir.path() / "a.pgm");
  ASSERT_EQ(back.width, 7);
  for (int i = 0; i < 35; ++i) EXPECT_NEAR(back.data[i], img.data[i], 1e-6);
}

TEST(ImageIo, PngRoundTrip) {
  if (!png_supported()) GTEST_SKIP() << "built without libpng";
  test::TempDir dir;
  RgbImage rgb(4, 3);
  rgb.set(1, 2, 255, 255, 255);
  write_png(rgb, dir.path() / "a.png");
  const GrayImage back = read_gray_image(dir.path() / "a.png");
  EXPECT_EQ(back.width, 4);
  EXPECT_NEAR(back.at(1, 2), 1.0, 1e-6);
  EXPECT_EQ(back.at(0, 0), 0.0f);
}

}  // namespace
}  // namespace stimkit::flow
