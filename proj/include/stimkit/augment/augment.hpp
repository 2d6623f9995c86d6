// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>

#include "stimkit/pose/types.hpp"
#include "stimkit/rng.hpp"

namespace stimkit::augment {

enum class DrawMode { kPerClip, kPerFrame };

/// Geometric training-time augmentation on keypoint coordinates. Both
/// transforms act about the frame center, so they commute.
struct AugmentSpec {
  double rotation_min_deg = -45.0;
  double rotation_max_deg = 45.0;
  double zoom_min = 1.0;
  double zoom_max = 2.0;
  DrawMode mode = DrawMode::kPerClip;
  std::uint64_t seed = 0;

  // Throws kRange naming `augment.rotation_range` or `augment.zoom_range`.
  void validate() const;
};

struct AugmentDraw {
  double theta_deg = 0.0;
  double zoom = 1.0;
};

/// Rotates present keypoints by theta (degrees) about the frame center in
/// image coordinates (y down): +90 deg sends a point right of center to
/// below center.
pose::KeypointSequence rotate_sequence(const pose::KeypointSequence& seq, double theta_deg);

/// Scales coordinates about the frame center; factor must be >= 1.
pose::KeypointSequence zoom_sequence(const pose::KeypointSequence& seq, double factor);

AugmentDraw draw_augmentation(const AugmentSpec& spec, Rng& rng);

/// Per-clip mode draws once for the sequence; per-frame mode draws for each
/// frame independently.
pose::KeypointSequence apply_augmentation(const pose::KeypointSequence& seq,
                                          const AugmentSpec& spec, Rng& rng);

}  // namespace stimkit::augment
