// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "stimkit/pose/types.hpp"
#include "stimkit/rng.hpp"

namespace stimkit::synth {

struct SubjectProfile {
  std::string subject_id;
  double base_x = 0.0;  // pixels
  double base_y = 0.0;
  double head_scale = 40.0;  // inter-ear distance, pixels
  double jitter_sigma = 0.5;
  double dropout_prob = 0.0;

  void validate() const;
};

enum class MotionClass { kHeadbanging, kStable };

struct MotionParams {
  MotionClass motion = MotionClass::kStable;
  double frequency_hz = 2.0;   // headbanging only
  double amplitude = 0.1;      // fraction of frame height; forced to 0 for stable
  double axis_x = 0.0;         // unit vector, image coordinates (y down)
  double axis_y = 1.0;
  double phase = 0.0;          // radians
  double camera_drift_sigma = 1.5;  // pixels per frame, per axis

  void validate() const;
};

/// Per-subject parameter ranges, all uniform.
struct ProfileRanges {
  double base_x_min = 0.35, base_x_max = 0.65;  // fractions of frame width
  double base_y_min = 0.30, base_y_max = 0.60;  // fractions of frame height
  double head_scale_min = 30.0, head_scale_max = 50.0;
  double jitter_min = 0.3, jitter_max = 1.0;
  double dropout_min = 0.0, dropout_max = 0.05;
};

/// Ids are "synth_000", "synth_001", ...
std::vector<SubjectProfile> gen_profiles(std::size_t n_subjects, pose::FrameSize frame,
                                         Rng& rng, const ProfileRanges& ranges = {});

struct SynthClip {
  pose::ClipRecord record;
  std::vector<pose::PoseFrame> frames;
  std::vector<std::pair<double, double>> camera;  // cumulative drift per frame
};

inline constexpr int kMinClipFrames = 35;

/// Head template scaled by head_scale at the profile's base position, plus
/// A*H*sin(2*pi*f*t/fps + phase) along the axis (headbanging), per-keypoint
/// Gaussian jitter, a camera random walk shared by all keypoints, and
/// independent dropout. Coordinates are rounded to float32.
SynthClip gen_clip(const SubjectProfile& profile, const MotionParams& params, int n_frames,
                   double fps, pose::FrameSize frame, Rng& rng, const std::string& clip_id);

struct SynthConfig {
  std::size_t subjects = 12;
  std::size_t clips_per_subject = 6;  // even; half positive
  int frames_per_clip = 90;
  double fps = 30.0;
  pose::FrameSize frame{320, 240};
  double camera_drift_sigma = 1.5;
  double frequency_min = 1.0, frequency_max = 3.0;
  double amplitude_min = 0.05, amplitude_max = 0.15;
  ProfileRanges profiles;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Motion parameters for one clip, drawn from the clip's own stream. Drift
/// does not depend on the class.
MotionParams draw_motion(const SynthConfig& config, MotionClass motion, Rng& rng);

/// All clips in memory; clip k of subject s is positive when k < half.
/// Each clip's stream is derived from (seed, clip_id), so clips do not depend
/// on generation order.
std::vector<SynthClip> gen_clips(const SynthConfig& config);

/// Writes keypoints/<clip_id>.json (consolidated form) and manifest.json
/// under out_dir; returns the manifest path.
std::filesystem::path gen_dataset(const SynthConfig& config, const std::filesystem::path& out_dir);

}  // namespace stimkit::synth
