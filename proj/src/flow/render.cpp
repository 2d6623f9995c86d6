// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/flow/render.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stimkit/error.hpp"

namespace stimkit::flow {

double flow_hue(double u, double v) {
  // Fold into the upper half-plane, quantize, then add 180 for the lower
  // half, so opposite vectors land exactly 180 degrees apart.
  const bool lower = v < 0.0 || (v == 0.0 && u < 0.0);
  if (lower) {
    u = -u;
    v = -v;
  }
  constexpr double kQuantum = 1048576.0;  // 2^20 steps per degree
  double half = std::atan2(v, u) * 180.0 / std::numbers::pi;
  half = std::round(half * kQuantum) / kQuantum;
  if (half >= 180.0) half = 0.0;
  return lower ? half + 180.0 : half;
}

HsvImage flow_to_hsv(const FlowField& flow, std::optional<double> max_magnitude) {
  if (flow.kind != FlowKind::kDense) {
    fail(ErrorKind::kConfig, "flow_to_hsv needs a dense field; use render_arrows for grids");
  }
  std::vector<double> mags(flow.size(), 0.0);
  std::vector<double> valid_mags;
  for (std::size_t i = 0; i < flow.size(); ++i) {
    mags[i] = std::hypot(double(flow.vectors[i].u), double(flow.vectors[i].v));
    if (flow.valid[i] && std::isfinite(mags[i])) valid_mags.push_back(mags[i]);
  }
  double scale = 0.0;
  if (max_magnitude) {
    scale = *max_magnitude;
  } else if (!valid_mags.empty()) {
    std::sort(valid_mags.begin(), valid_mags.end());
    const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(valid_mags.size())));
    scale = valid_mags[std::max<std::size_t>(rank, 1) - 1];
  }

  HsvImage out;
  out.width = flow.width;
  out.height = flow.height;
  out.pixels.assign(static_cast<std::size_t>(flow.width) * static_cast<std::size_t>(flow.height), Hsv{});
  for (std::size_t i = 0; i < flow.size(); ++i) {
    const auto x = static_cast<int>(flow.points[i].x);
    const auto y = static_cast<int>(flow.points[i].y);
    if (x < 0 || y < 0 || x >= flow.width || y >= flow.height) continue;
    Hsv& px = out.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(flow.width) + static_cast<std::size_t>(x)];
    if (!flow.valid[i] || !std::isfinite(mags[i]) || mags[i] == 0.0 || !(scale > 0.0)) continue;
    px.hue = flow_hue(flow.vectors[i].u, flow.vectors[i].v);
    px.saturation = 1.0;
    px.value = std::clamp(mags[i] / scale, 0.0, 1.0);
  }
  return out;
}

RgbImage hsv_to_rgb(const HsvImage& hsv) {
  RgbImage out(hsv.width, hsv.height);
  for (int y = 0; y < hsv.height; ++y) {
    for (int x = 0; x < hsv.width; ++x) {
      const Hsv& p = hsv.pixels[static_cast<std::size_t>(y) * static_cast<std::size_t>(hsv.width) + static_cast<std::size_t>(x)];
      const double c = p.value * p.saturation;
      const double hp = p.hue / 60.0;
      const double xx = c * (1.0 - std::abs(std::fmod(hp, 2.0) - 1.0));
      double r = 0, g = 0, b = 0;
      switch (static_cast<int>(hp) % 6) {
        case 0: r = c; g = xx; break;
        case 1: r = xx; g = c; break;
        case 2: g = c; b = xx; break;
        case 3: g = xx; b = c; break;
        case 4: r = xx; b = c; break;
        default: r = c; b = xx; break;
      }
      const double m = p.value - c;
      auto to8 = [](double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); };
      out.set(x, y, to8(r + m), to8(g + m), to8(b + m));
    }
  }
  return out;
}

RgbImage render_arrows(const FlowField& flow, const GrayImage* background,
                       const ArrowStyle& style) {
  if (flow.kind != FlowKind::kSparseGrid) {
    fail(ErrorKind::kConfig, "render_arrows needs a sparse grid field; use flow_to_hsv for dense");
  }
  RgbImage out(flow.width, flow.height);
  if (background) {
    if (background->width != flow.width || background->height != flow.height) {
      fail(ErrorKind::kSize, "render_arrows background does not match flow size");
    }
    for (int y = 0; y < flow.height; ++y) {
      for (int x = 0; x < flow.width; ++x) {
        const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(background->at(x, y), 0.0f, 1.0f) * 255.0f));
        out.set(x, y, g, g, g);
      }
    }
  }
  for (std::size_t i = 0; i < flow.size(); ++i) {
    if (!flow.valid[i]) continue;
    const double x0 = flow.points[i].x;
    const double y0 = flow.points[i].y;
    const double x1 = x0 + style.scale * flow.vectors[i].u;
    const double y1 = y0 + style.scale * flow.vectors[i].v;
    const double reach = std::max(std::abs(x1 - x0), std::abs(y1 - y0));
    const int steps = std::isfinite(reach)
                          ? static_cast<int>(std::ceil(std::min(reach, 2.0 * (flow.width + flow.height))))
                          : 0;
    for (int s = 1; s <= steps; ++s) {
      const double t = static_cast<double>(s) / steps;
      out.set(static_cast<int>(std::lround(x0 + t * (x1 - x0))),
              static_cast<int>(std::lround(y0 + t * (y1 - y0))), style.line[0], style.line[1],
              style.line[2]);
    }
    out.set(static_cast<int>(std::lround(x0)), static_cast<int>(std::lround(y0)), style.dot[0],
            style.dot[1], style.dot[2]);
  }
  return out;
}

}  // namespace stimkit::flow
