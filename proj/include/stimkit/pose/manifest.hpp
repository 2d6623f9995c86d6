// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "stimkit/pose/types.hpp"

namespace stimkit::pose {

inline constexpr int kManifestVersion = 1;

struct Manifest {
  int version = kManifestVersion;
  FrameSize frame_size;
  std::vector<ClipRecord> clips;
  // Directory that relative keypoint paths resolve against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const ClipRecord& clip) const;
};

Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const std::string& text, const std::string& source);

/// Serializes with the documented field order; keypoint paths are written
/// as stored in the records.
std::string serialize_manifest(const Manifest& manifest);

/// Frames of one clip restricted to [start_frame, end_frame]. Indices
/// missing from the source come back as all-absent frames so the result is
/// contiguous.
std::vector<PoseFrame> load_clip_frames(const Manifest& manifest,
                                        const ClipRecord& clip);

}  // namespace stimkit::pose
