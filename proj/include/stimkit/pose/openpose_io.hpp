// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "stimkit/pose/types.hpp"

namespace stimkit::pose {

/// Parses one OpenPose per-frame JSON document. When several people are
/// present the one with the largest summed head-keypoint confidence wins;
/// an empty `people` array yields an all-absent frame. Coordinates are
/// rounded through float32.
PoseFrame import_openpose_frame(std::string_view raw_json,
                                std::string_view source_name, int frame_index);

/// Reads a keypoint source: either a directory of per-frame JSON files
/// (lexicographic file order is frame order) or one consolidated JSON array.
std::vector<PoseFrame> read_keypoint_source(const std::filesystem::path& path);

/// Consolidated single-file form. Coordinates are written as shortest
/// float32 representations, so reading back is exact.
std::string write_consolidated(std::span<const PoseFrame> frames);

/// Per-frame OpenPose document for a single person.
std::string write_openpose_frame(const PoseFrame& frame);

}  // namespace stimkit::pose
