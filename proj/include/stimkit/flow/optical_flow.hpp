// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "stimkit/flow/image.hpp"

namespace stimkit::flow {

enum class FlowKind { kSparseGrid, kDense };

struct FlowPoint {
  float x = 0.0f;
  float y = 0.0f;
};

struct FlowVector {
  float u = 0.0f;
  float v = 0.0f;
};

/// Displacements from `prev` to `next`: content at p in prev appears at
/// p + (u, v) in next.
struct FlowField {
  FlowKind kind = FlowKind::kDense;
  int width = 0;   // source image size
  int height = 0;
  int grid_cols = 0;  // lattice shape for kSparseGrid
  int grid_rows = 0;
  std::vector<FlowPoint> points;
  std::vector<FlowVector> vectors;
  std::vector<std::uint8_t> valid;

  std::size_t size() const { return points.size(); }
  std::size_t valid_count() const;
};

/// Central differences inside, one-sided at the borders.
std::pair<GrayImage, GrayImage> image_gradients(const GrayImage& img);

struct LucasKanadeParams {
  int spacing = 10;
  int window = 15;
  double min_eigen = 1e-4;
  int iterations = 5;  // Gauss-Newton refinement passes
};

/// Flow at lattice points x = 0, spacing, ... (same for y). A point is
/// invalid when the smaller eigenvalue of its windowed structure tensor is
/// below min_eigen.
FlowField lucas_kanade_grid(const GrayImage& prev, const GrayImage& next,
                            const LucasKanadeParams& params = {});

struct FarnebackParams {
  double sigma_expansion = 1.5;
  int avg_window = 15;
  int iterations = 3;
  double min_determinant = 1e-9;
};

/// Per-pixel quadratic expansion of both frames, displacement from the
/// averaged expansion, refined by warping passes and box-averaged over
/// avg_window.
FlowField farneback_dense(const GrayImage& prev, const GrayImage& next,
                          const FarnebackParams& params = {});

struct PolynomialExpansion {
  int width = 0;
  int height = 0;
  // Per pixel: a11, a12, a22 (A symmetric), b1, b2.
  std::vector<double> coeffs;
};

PolynomialExpansion polynomial_expansion(const GrayImage& img, double sigma);

}  // namespace stimkit::flow
