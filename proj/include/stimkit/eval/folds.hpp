// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "stimkit/pose/types.hpp"

namespace stimkit::eval {

struct FoldPlan {
  std::size_t k = 3;
  std::uint64_t seed = 0;
  std::map<std::string, std::size_t> assignments;  // subject -> fold
  std::vector<std::size_t> fold_windows;           // window count per fold
  std::vector<std::string> warnings;

  std::size_t fold_of(const std::string& subject_id) const;
  std::vector<std::string> subjects_in(std::size_t fold) const;
};

/// Subjects are shuffled with the seeded RNG, stably ordered by window count
/// (largest first), then each goes to the fold with the fewest windows so
/// far (ties: fewer subjects, then lower index). All clips of a subject share
/// its fold. `clip_windows[i]` is the window count of `clips[i]`.
FoldPlan subject_disjoint_folds(std::span<const pose::ClipRecord> clips,
                                std::span<const std::size_t> clip_windows, std::size_t k,
                                std::uint64_t seed);

/// Same, with each clip weighted by the number of windows its frame range
/// can hold under `params`.
FoldPlan subject_disjoint_folds(std::span<const pose::ClipRecord> clips, std::size_t k,
                                std::uint64_t seed, const pose::WindowParams& params = {});

/// Windows a frame range of `frames` frames can hold; 0 when too short.
std::size_t window_capacity(int frames, const pose::WindowParams& params);

}  // namespace stimkit::eval
