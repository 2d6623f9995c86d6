// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <span>
#include <vector>

#include "stimkit/pose/types.hpp"

namespace stimkit::pose {

inline constexpr double kDefaultConfidenceThreshold = 0.1;

/// Keeps nose, neck, eyes and ears with confidence >= threshold, plus the
/// head edges whose endpoints both survive.
HeadPose filter_head(const PoseFrame& frame,
                     double confidence_threshold = kDefaultConfidenceThreshold);

struct WindowSampling {
  std::vector<KeypointSequence> windows;
  int dropped_invalid = 0;  // windows failing the valid-frame rule
  bool clip_too_short = false;
};

/// Cuts a clip's contiguous head poses into stride-sampled windows. Window k
/// takes frames k*hop + j*stride, j = 0..length-1; windows running past the
/// clip end are not emitted, and windows with fewer than ceil(0.7 * length)
/// valid frames are dropped and counted.
WindowSampling sample_windows(const ClipRecord& clip, FrameSize frame_size,
                              std::span<const HeadPose> frames,
                              const WindowParams& params = {});

/// Translates the whole sequence so the mean of all present points lands on
/// the frame center. The shift is snapped to a 1/256 px grid, which keeps
/// inter-frame offsets exact and makes the operation idempotent.
KeypointSequence center_sequence(const KeypointSequence& seq);

/// Mean of all present points across all frames.
std::optional<std::pair<double, double>> sequence_centroid(const KeypointSequence& seq);

}  // namespace stimkit::pose
