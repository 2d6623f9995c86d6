// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/pose/raster.hpp"

#include <algorithm>
#include <cmath>

#include "stimkit/error.hpp"
#include "stimkit/pose/features.hpp"

namespace stimkit::pose {
namespace {

struct Canvas {
  int width;
  int height;
  float* pixels;

  // Sets every pixel whose center lies within `radius` of segment ab.
  void stamp_segment(double ax, double ay, double bx, double by, double radius) {
    const double lo_x = std::min(ax, bx) - radius - 0.5;
    const double hi_x = std::max(ax, bx) + radius;
    const double lo_y = std::min(ay, by) - radius - 0.5;
    const double hi_y = std::max(ay, by) + radius;
    if (!(hi_x >= 0.0 && hi_y >= 0.0 && lo_x < width && lo_y < height)) return;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::max(lo_x, -1.0))));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(std::min(hi_x, width + 1.0))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::max(lo_y, -1.0))));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(std::min(hi_y, height + 1.0))));
    const double dx = bx - ax;
    const double dy = by - ay;
    const double len2 = dx * dx + dy * dy;
    const double r2 = radius * radius;
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5 - ax;
        const double py = y + 0.5 - ay;
        double t = len2 > 0.0 ? (px * dx + py * dy) / len2 : 0.0;
        t = std::clamp(t, 0.0, 1.0);
        const double ex = px - t * dx;
        const double ey = py - t * dy;
        if (ex * ex + ey * ey <= r2) pixels[y * width + x] = 1.0f;
      }
    }
  }
};

FrameSize effective_frame_size(const KeypointSequence& seq) {
  if (seq.frame_size.width > 0 && seq.frame_size.height > 0) return seq.frame_size;
  double max_x = 0.0;
  double max_y = 0.0;
  for (const HeadPose& h : seq.frames) {
    for (const auto& p : h.points) {
      if (!p) continue;
      max_x = std::max(max_x, p->x);
      max_y = std::max(max_y, p->y);
    }
  }
  return FrameSize{static_cast<int>(std::ceil(max_x)) + 1,
                   static_cast<int>(std::ceil(max_y)) + 1};
}

}  // namespace

void RasterSpec::validate() const {
  if (width < 16 || height < 16) {
    fail(ErrorKind::kConfig, "raster width and height must be >= 16");
  }
  if (!(point_radius >= 1.0)) fail(ErrorKind::kConfig, "raster point_radius must be >= 1");
  if (!(line_thickness > 0.0)) fail(ErrorKind::kConfig, "raster line_thickness must be > 0");
}

RasterClip rasterize(const KeypointSequence& input, const RasterSpec& spec) {
  KeypointSequence seq = input;
  seq.frame_size = effective_frame_size(input);
  if (spec.center_mode == CenterMode::kSequenceMean && sequence_centroid(seq)) {
    seq = center_sequence(seq);
  }

  RasterClip clip;
  clip.length = static_cast<int>(seq.frames.size());
  clip.height = spec.height;
  clip.width = spec.width;
  clip.label = seq.label;
  clip.subject_id = seq.subject_id;
  clip.clip_id = seq.clip_id;
  clip.origin_frame = seq.origin_frame;
  clip.data.assign(static_cast<std::size_t>(clip.length) * clip.frame_pixels(), 0.0f);

  const double scale = std::min(static_cast<double>(spec.width) / seq.frame_size.width,
                                static_cast<double>(spec.height) / seq.frame_size.height);
  const double src_cx = 0.5 * seq.frame_size.width;
  const double src_cy = 0.5 * seq.frame_size.height;
  const double dst_cx = 0.5 * spec.width;
  const double dst_cy = 0.5 * spec.height;
  auto map = [&](const Keypoint& k) {
    return std::make_pair((k.x - src_cx) * scale + dst_cx, (k.y - src_cy) * scale + dst_cy);
  };

  for (int t = 0; t < clip.length; ++t) {
    const HeadPose& h = seq.frames[static_cast<std::size_t>(t)];
    Canvas canvas{spec.width, spec.height,
                  clip.data.data() + static_cast<std::size_t>(t) * clip.frame_pixels()};
    for (const HeadEdge& e : h.edges) {
      const auto& a = h.at(e.first);
      const auto& b = h.at(e.second);
      if (!a || !b) continue;
      const auto [ax, ay] = map(*a);
      const auto [bx, by] = map(*b);
      canvas.stamp_segment(ax, ay, bx, by, 0.5 * spec.line_thickness);
    }
    for (const auto& p : h.points) {
      if (!p) continue;
      const auto [px, py] = map(*p);
      canvas.stamp_segment(px, py, px, py, spec.point_radius);
    }
  }
  return clip;
}

}  // namespace stimkit::pose
