// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stimkit::pose {

/// A detected 2D landmark in frame pixel coordinates. Coordinates are held
/// in double precision; values read from files are float32-exact.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double confidence = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

inline constexpr std::size_t kBody25Size = 25;

/// One frame of BODY_25 keypoints. Missing detections are (0, 0, 0).
struct PoseFrame {
  int frame_index = 0;
  std::array<Keypoint, kBody25Size> keypoints{};

  friend bool operator==(const PoseFrame&, const PoseFrame&) = default;
};

enum class HeadPart : std::uint8_t {
  kNose = 0,
  kNeck,
  kRightEye,
  kLeftEye,
  kRightEar,
  kLeftEar,
};

inline constexpr std::size_t kHeadPartCount = 6;

// BODY_25 slot of each head part, in HeadPart order.
inline constexpr std::array<std::size_t, kHeadPartCount> kHeadBody25Index = {
    0, 1, 15, 16, 17, 18};

using HeadEdge = std::pair<HeadPart, HeadPart>;

inline constexpr std::array<HeadEdge, 5> kHeadEdges = {{
    {HeadPart::kNose, HeadPart::kNeck},
    {HeadPart::kNose, HeadPart::kRightEye},
    {HeadPart::kNose, HeadPart::kLeftEye},
    {HeadPart::kRightEye, HeadPart::kRightEar},
    {HeadPart::kLeftEye, HeadPart::kLeftEar},
}};

std::string_view to_string(HeadPart part);

/// Head-region subset of a PoseFrame plus the edges between present parts.
struct HeadPose {
  int frame_index = 0;
  std::array<std::optional<Keypoint>, kHeadPartCount> points{};
  std::vector<HeadEdge> edges;

  const std::optional<Keypoint>& at(HeadPart part) const {
    return points[static_cast<std::size_t>(part)];
  }
  std::optional<Keypoint>& at(HeadPart part) {
    return points[static_cast<std::size_t>(part)];
  }
  std::size_t present_count() const;
  bool valid() const { return present_count() >= 2; }

  friend bool operator==(const HeadPose&, const HeadPose&) = default;
};

enum class Label : std::uint8_t { kNegative = 0, kPositive = 1, kUnset = 2 };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);

struct FrameSize {
  int width = 0;
  int height = 0;

  friend bool operator==(const FrameSize&, const FrameSize&) = default;
};

struct ClipRecord {
  std::string clip_id;
  std::string subject_id;
  Label label = Label::kUnset;
  double fps = 30.0;
  std::string keypoint_source;  // resolved path
  int start_frame = 0;
  int end_frame = 0;            // inclusive

  friend bool operator==(const ClipRecord&, const ClipRecord&) = default;
};

struct WindowParams {
  int length = 7;
  int stride = 5;
  int hop = 15;

  int span() const { return (length - 1) * stride + 1; }
  int min_valid_frames() const;  // ceil(0.7 * length)
};

/// A fixed-length, stride-sampled run of head poses: the unit of
/// classification.
struct KeypointSequence {
  std::string clip_id;
  std::string subject_id;
  Label label = Label::kUnset;
  std::vector<HeadPose> frames;
  int stride = 5;
  int origin_frame = 0;
  FrameSize frame_size;

  friend bool operator==(const KeypointSequence&, const KeypointSequence&) =
      default;
};

}  // namespace stimkit::pose
