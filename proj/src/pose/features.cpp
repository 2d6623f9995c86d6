// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/pose/features.hpp"

#include <cmath>
#include <stdexcept>

#include "stimkit/error.hpp"

namespace stimkit::pose {

std::string_view to_string(HeadPart part) {
  switch (part) {
    case HeadPart::kNose: return "nose";
    case HeadPart::kNeck: return "neck";
    case HeadPart::kRightEye: return "right_eye";
    case HeadPart::kLeftEye: return "left_eye";
    case HeadPart::kRightEar: return "right_ear";
    case HeadPart::kLeftEar: return "left_ear";
  }
  return "unknown";
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::kPositive: return "positive";
    case Label::kNegative: return "negative";
    case Label::kUnset: return "UNSET";
  }
  return "UNSET";
}

std::optional<Label> parse_label(std::string_view text) {
  if (text == "positive") return Label::kPositive;
  if (text == "negative") return Label::kNegative;
  if (text == "UNSET") return Label::kUnset;
  return std::nullopt;
}

std::size_t HeadPose::present_count() const {
  std::size_t n = 0;
  for (const auto& p : points) n += p.has_value() ? 1 : 0;
  return n;
}

int WindowParams::min_valid_frames() const {
  // ceil(0.7 * length) in integers
  return (7 * length + 9) / 10;
}

HeadPose filter_head(const PoseFrame& frame, double confidence_threshold) {
  HeadPose head;
  head.frame_index = frame.frame_index;
  for (std::size_t i = 0; i < kHeadPartCount; ++i) {
    const Keypoint& k = frame.keypoints[kHeadBody25Index[i]];
    if (k.confidence >= confidence_threshold && k.confidence > 0.0) {
      head.points[i] = k;
    }
  }
  for (const HeadEdge& e : kHeadEdges) {
    if (head.at(e.first) && head.at(e.second)) head.edges.push_back(e);
  }
  return head;
}

WindowSampling sample_windows(const ClipRecord& clip, FrameSize frame_size,
                              std::span<const HeadPose> frames,
                              const WindowParams& params) {
  if (params.length < 2 || params.stride < 1 || params.hop < 1) {
    fail(ErrorKind::kConfig, "window params need length >= 2, stride >= 1, hop >= 1");
  }
  WindowSampling out;
  const int n = static_cast<int>(frames.size());
  const int span = params.span();
  if (n < span) {
    out.clip_too_short = true;
    return out;
  }
  const int need = params.min_valid_frames();
  for (int start = 0; start + span <= n; start += params.hop) {
    KeypointSequence seq;
    seq.clip_id = clip.clip_id;
    seq.subject_id = clip.subject_id;
    seq.label = clip.label;
    seq.stride = params.stride;
    seq.origin_frame = frames[static_cast<std::size_t>(start)].frame_index;
    seq.frame_size = frame_size;
    int valid = 0;
    for (int j = 0; j < params.length; ++j) {
      const HeadPose& h = frames[static_cast<std::size_t>(start + j * params.stride)];
      valid += h.valid() ? 1 : 0;
      seq.frames.push_back(h);
    }
    if (valid < need) {
      ++out.dropped_invalid;
      continue;
    }
    out.windows.push_back(std::move(seq));
  }
  return out;
}

std::optional<std::pair<double, double>> sequence_centroid(const KeypointSequence& seq) {
  double sx = 0.0;
  double sy = 0.0;
  std::size_t count = 0;
  for (const HeadPose& h : seq.frames) {
    for (const auto& p : h.points) {
      if (!p) continue;
      sx += p->x;
      sy += p->y;
      ++count;
    }
  }
  if (count == 0) return std::nullopt;
  return std::make_pair(sx / static_cast<double>(count), sy / static_cast<double>(count));
}

KeypointSequence center_sequence(const KeypointSequence& seq) {
  const auto centroid = sequence_centroid(seq);
  if (!centroid) {
    fail(ErrorKind::kInvalidSequence,
         "sequence " + seq.clip_id + "@" + std::to_string(seq.origin_frame) +
             " has no present keypoints");
  }
  constexpr double kGrid = 256.0;
  const double cx = 0.5 * seq.frame_size.width;
  const double cy = 0.5 * seq.frame_size.height;
  const double dx = std::nearbyint((cx - centroid->first) * kGrid) / kGrid;
  const double dy = std::nearbyint((cy - centroid->second) * kGrid) / kGrid;
  KeypointSequence out = seq;
  for (HeadPose& h : out.frames) {
    for (auto& p : h.points) {
      if (!p) continue;
      p->x += dx;
      p->y += dy;
    }
  }
  return out;
}

}  // namespace stimkit::pose
