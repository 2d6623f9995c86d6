// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/synth/synthgen.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "stimkit/error.hpp"
#include "stimkit/nn/checkpoint.hpp"
#include "stimkit/pose/manifest.hpp"
#include "stimkit/pose/openpose_io.hpp"

namespace stimkit::synth {
namespace {

struct TemplatePoint {
  std::size_t body25;
  double dx, dy;  // head_scale units, y down, nose at the origin
};

constexpr TemplatePoint kTemplate[] = {
    {0, 0.0, 0.0},      // nose
    {1, 0.0, 0.9},      // neck
    {15, -0.2, -0.15},  // right eye
    {16, 0.2, -0.15},   // left eye
    {17, -0.5, -0.05},  // right ear
    {18, 0.5, -0.05},   // left ear
};

double uniform(Rng& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

double to_f32(double v) { return static_cast<double>(static_cast<float>(v)); }

}  // namespace

void SubjectProfile::validate() const {
  if (!(head_scale > 0.0)) fail(ErrorKind::kConfig, "profile " + subject_id + ": head_scale must be > 0");
  if (!(jitter_sigma >= 0.0)) fail(ErrorKind::kConfig, "profile " + subject_id + ": jitter must be >= 0");
  if (!(dropout_prob >= 0.0 && dropout_prob < 0.5)) {
    fail(ErrorKind::kConfig, "profile " + subject_id + ": dropout must be in [0, 0.5)");
  }
}

void MotionParams::validate() const {
  if (!(camera_drift_sigma >= 0.0)) fail(ErrorKind::kConfig, "camera_drift_sigma must be >= 0");
  const double norm = std::hypot(axis_x, axis_y);
  if (std::abs(norm - 1.0) > 1e-9) fail(ErrorKind::kConfig, "motion axis must be a unit vector");
  if (motion == MotionClass::kHeadbanging) {
    if (!(frequency_hz > 0.0)) fail(ErrorKind::kConfig, "frequency must be > 0");
    if (!(amplitude >= 0.0)) fail(ErrorKind::kConfig, "amplitude must be >= 0");
  }
}

void SynthConfig::validate() const {
  if (subjects < 1) fail(ErrorKind::kConfig, "synth.subjects must be >= 1");
  if (clips_per_subject < 2 || clips_per_subject % 2 != 0) {
    fail(ErrorKind::kConfig, "synth.clips_per_subject must be even and >= 2");
  }
  if (frames_per_clip < kMinClipFrames) {
    fail(ErrorKind::kSize, "synth.frames_per_clip must be >= " + std::to_string(kMinClipFrames));
  }
  if (!(fps > 0.0)) fail(ErrorKind::kConfig, "synth.fps must be > 0");
  if (frame.width < 16 || frame.height < 16) fail(ErrorKind::kConfig, "synth frame must be at least 16x16");
  if (!(camera_drift_sigma >= 0.0)) fail(ErrorKind::kConfig, "synth.camera_drift_sigma must be >= 0");
  if (!(frequency_min > 0.0 && frequency_min <= frequency_max)) {
    fail(ErrorKind::kConfig, "synth.frequency_range must satisfy 0 < min <= max");
  }
  if (!(amplitude_min >= 0.0 && amplitude_min <= amplitude_max)) {
    fail(ErrorKind::kConfig, "synth.amplitude_range must satisfy 0 <= min <= max");
  }
}

std::vector<SubjectProfile> gen_profiles(std::size_t n, pose::FrameSize frame, Rng& rng,
                                         const ProfileRanges& r) {
  if (n == 0) fail(ErrorKind::kConfig, "gen_profiles needs at least one subject");
  std::vector<SubjectProfile> out;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%03zu", i);
    SubjectProfile p;
    p.subject_id = id;
    p.base_x = uniform(rng, r.base_x_min, r.base_x_max) * frame.width;
    p.base_y = uniform(rng, r.base_y_min, r.base_y_max) * frame.height;
    p.head_scale = uniform(rng, r.head_scale_min, r.head_scale_max);
    p.jitter_sigma = uniform(rng, r.jitter_min, r.jitter_max);
    p.dropout_prob = uniform(rng, r.dropout_min, r.dropout_max);
    p.validate();
    out.push_back(std::move(p));
  }
  return out;
}

SynthClip gen_clip(const SubjectProfile& profile, const MotionParams& params, int n_frames,
                   double fps, pose::FrameSize frame, Rng& rng, const std::string& clip_id) {
  profile.validate();
  params.validate();
  if (n_frames < kMinClipFrames) {
    fail(ErrorKind::kSize, "clip needs at least " + std::to_string(kMinClipFrames) + " frames, got " +
                               std::to_string(n_frames));
  }
  if (!(fps > 0.0)) fail(ErrorKind::kConfig, "fps must be > 0");
  const bool banging = params.motion == MotionClass::kHeadbanging;
  const double amplitude = banging ? params.amplitude * frame.height : 0.0;

  SynthClip clip;
  clip.record.clip_id = clip_id;
  clip.record.subject_id = profile.subject_id;
  clip.record.label = banging ? pose::Label::kPositive : pose::Label::kNegative;
  clip.record.fps = fps;
  clip.record.start_frame = 0;
  clip.record.end_frame = n_frames - 1;

  std::normal_distribution<double> step(0.0, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> confidence(0.6, 1.0);
  double cam_x = 0.0, cam_y = 0.0;
  for (int t = 0; t < n_frames; ++t) {
    // Draw order is fixed per frame: camera, then per keypoint jitter x/y,
    // dropout, confidence.
    if (t > 0) {
      cam_x += params.camera_drift_sigma * step(rng);
      cam_y += params.camera_drift_sigma * step(rng);
    }
    clip.camera.emplace_back(cam_x, cam_y);
    const double s = banging ? amplitude * std::sin(2.0 * std::numbers::pi * params.frequency_hz * t / fps + params.phase) : 0.0;
    pose::PoseFrame pf;
    pf.frame_index = t;
    for (const TemplatePoint& tp : kTemplate) {
      const double jx = profile.jitter_sigma * jitter(rng);
      const double jy = profile.jitter_sigma * jitter(rng);
      const bool dropped = unit(rng) < profile.dropout_prob;
      const double c = confidence(rng);
      if (dropped) continue;
      pose::Keypoint& k = pf.keypoints[tp.body25];
      k.x = to_f32(profile.base_x + tp.dx * profile.head_scale + s * params.axis_x + cam_x + jx);
      k.y = to_f32(profile.base_y + tp.dy * profile.head_scale + s * params.axis_y + cam_y + jy);
      k.confidence = to_f32(c);
    }
    clip.frames.push_back(pf);
  }
  return clip;
}

MotionParams draw_motion(const SynthConfig& config, MotionClass motion, Rng& rng) {
  MotionParams m;
  m.motion = motion;
  m.camera_drift_sigma = config.camera_drift_sigma;
  // Drawn for both classes so the stream layout does not depend on the label.
  m.frequency_hz = uniform(rng, config.frequency_min, config.frequency_max);
  m.amplitude = uniform(rng, config.amplitude_min, config.amplitude_max);
  m.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
  if (motion == MotionClass::kStable) m.amplitude = 0.0;
  return m;
}

std::vector<SynthClip> gen_clips(const SynthConfig& config) {
  config.validate();
  Rng profile_rng(derive_seed(config.seed, "profiles"));
  const auto profiles = gen_profiles(config.subjects, config.frame, profile_rng, config.profiles);
  std::vector<SynthClip> clips;
  for (const SubjectProfile& p : profiles) {
    for (std::size_t k = 0; k < config.clips_per_subject; ++k) {
      char id[48];
      std::snprintf(id, sizeof id, "%s_c%02zu", p.subject_id.c_str(), k);
      Rng rng(derive_seed(config.seed, std::string_view(id)));
      const MotionClass motion = k < config.clips_per_subject / 2 ? MotionClass::kHeadbanging : MotionClass::kStable;
      const MotionParams m = draw_motion(config, motion, rng);
      clips.push_back(gen_clip(p, m, config.frames_per_clip, config.fps, config.frame, rng, id));
    }
  }
  return clips;
}

std::filesystem::path gen_dataset(const SynthConfig& config, const std::filesystem::path& out_dir) {
  std::vector<SynthClip> clips = gen_clips(config);
  pose::Manifest manifest;
  manifest.frame_size = config.frame;
  manifest.base_dir = out_dir;
  for (SynthClip& c : clips) {
    const std::string rel = "keypoints/" + c.record.clip_id + ".json";
    nn::write_file_atomic(out_dir / rel, pose::write_consolidated(c.frames));
    c.record.keypoint_source = rel;
    manifest.clips.push_back(c.record);
  }
  const auto path = out_dir / "manifest.json";
  nn::write_file_atomic(path, pose::serialize_manifest(manifest));
  return path;
}

}  // namespace stimkit::synth
