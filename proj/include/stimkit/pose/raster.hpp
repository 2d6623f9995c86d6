// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <string>
#include <vector>

#include "stimkit/pose/types.hpp"

namespace stimkit::pose {

enum class CenterMode { kNone, kSequenceMean };

struct RasterSpec {
  int width = 64;
  int height = 64;
  double point_radius = 2.0;
  double line_thickness = 1.0;
  CenterMode center_mode = CenterMode::kSequenceMean;

  void validate() const;
};

/// T single-channel frames, each height x width, stored frame-major then
/// row-major. Background is 0, drawn skeleton is 1.
struct RasterClip {
  int length = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;
  Label label = Label::kUnset;
  std::string subject_id;
  std::string clip_id;
  int origin_frame = 0;

  std::size_t frame_pixels() const {
    return static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
  }
  std::span<const float> frame(int t) const {
    return {data.data() + static_cast<std::size_t>(t) * frame_pixels(), frame_pixels()};
  }
  float at(int t, int y, int x) const {
    return data[static_cast<std::size_t>(t) * frame_pixels() +
                static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
                static_cast<std::size_t>(x)];
  }
};

/// Draws each frame's present head points as filled disks and its edges as
/// thick segments. Frame coordinates map to the raster by one uniform,
/// aspect-preserving scale with frame center -> raster center; anything that
/// lands outside the raster is clipped. With CenterMode::kSequenceMean the
/// sequence is first passed through center_sequence.
RasterClip rasterize(const KeypointSequence& seq, const RasterSpec& spec);

}  // namespace stimkit::pose
