// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <vector>

#include "stimkit/flow/image.hpp"
#include "stimkit/flow/optical_flow.hpp"

namespace stimkit::flow {

struct Hsv {
  double hue = 0.0;         // degrees in [0, 360)
  double saturation = 0.0;
  double value = 0.0;
};

struct HsvImage {
  int width = 0;
  int height = 0;
  std::vector<Hsv> pixels;
};

/// Hue from direction, brightness from magnitude. Without an explicit
/// max_magnitude the 95th percentile of valid magnitudes is used. Invalid
/// and zero vectors render black.
HsvImage flow_to_hsv(const FlowField& flow, std::optional<double> max_magnitude = std::nullopt);

RgbImage hsv_to_rgb(const HsvImage& hsv);

/// Hue of a single vector; hue(-u, -v) == hue(u, v) +- 180 exactly.
double flow_hue(double u, double v);

struct ArrowStyle {
  double scale = 1.0;
  std::uint8_t line[3] = {0, 255, 0};
  std::uint8_t dot[3] = {255, 0, 0};
};

/// Segments from each valid lattice point along its vector, over the given
/// background (black when absent).
RgbImage render_arrows(const FlowField& flow, const GrayImage* background,
                       const ArrowStyle& style = {});

}  // namespace stimkit::flow
