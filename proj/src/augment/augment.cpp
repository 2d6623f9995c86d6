// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/augment/augment.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "stimkit/error.hpp"

namespace stimkit::augment {
namespace {

void transform_frame(pose::HeadPose& frame, double cx, double cy, double theta_deg,
                     double factor) {
  if (theta_deg == 0.0 && factor == 1.0) return;
  const double rad = theta_deg * std::numbers::pi / 180.0;
  const double c = std::cos(rad) * factor;
  const double s = std::sin(rad) * factor;
  for (auto& p : frame.points) {
    if (!p) continue;
    const double dx = p->x - cx;
    const double dy = p->y - cy;
    p->x = cx + c * dx - s * dy;
    p->y = cy + s * dx + c * dy;
  }
}

void transform(pose::KeypointSequence& seq, double theta_deg, double factor) {
  const double cx = 0.5 * seq.frame_size.width;
  const double cy = 0.5 * seq.frame_size.height;
  for (auto& frame : seq.frames) transform_frame(frame, cx, cy, theta_deg, factor);
}

}  // namespace

void AugmentSpec::validate() const {
  if (!(rotation_min_deg <= rotation_max_deg) || rotation_min_deg != -rotation_max_deg ||
      rotation_max_deg > 180.0) {
    fail(ErrorKind::kRange,
         "augment.rotation_range must be a symmetric interval within [-180, 180]");
  }
  if (!(zoom_min >= 1.0) || !(zoom_min <= zoom_max) || !std::isfinite(zoom_max)) {
    fail(ErrorKind::kRange, "augment.zoom_range must satisfy 1 <= min <= max");
  }
}

pose::KeypointSequence rotate_sequence(const pose::KeypointSequence& seq, double theta_deg) {
  pose::KeypointSequence out = seq;
  if (theta_deg != 0.0) transform(out, theta_deg, 1.0);
  return out;
}

pose::KeypointSequence zoom_sequence(const pose::KeypointSequence& seq, double factor) {
  if (!(factor >= 1.0)) {
    fail(ErrorKind::kRange, "zoom factor must be >= 1, got " + std::to_string(factor));
  }
  pose::KeypointSequence out = seq;
  if (factor == 1.0) return out;
  const double cx = 0.5 * seq.frame_size.width;
  const double cy = 0.5 * seq.frame_size.height;
  for (auto& frame : out.frames) {
    for (auto& p : frame.points) {
      if (!p) continue;
      p->x = cx + factor * (p->x - cx);
      p->y = cy + factor * (p->y - cy);
    }
  }
  return out;
}

AugmentDraw draw_augmentation(const AugmentSpec& spec, Rng& rng) {
  std::uniform_real_distribution<double> theta(spec.rotation_min_deg, spec.rotation_max_deg);
  std::uniform_real_distribution<double> zoom(spec.zoom_min, spec.zoom_max);
  AugmentDraw d;
  d.theta_deg = theta(rng);
  d.zoom = zoom(rng);
  return d;
}

pose::KeypointSequence apply_augmentation(const pose::KeypointSequence& seq,
                                          const AugmentSpec& spec, Rng& rng) {
  pose::KeypointSequence out = seq;
  const double cx = 0.5 * seq.frame_size.width;
  const double cy = 0.5 * seq.frame_size.height;
  if (spec.mode == DrawMode::kPerClip) {
    const AugmentDraw d = draw_augmentation(spec, rng);
    for (auto& frame : out.frames) transform_frame(frame, cx, cy, d.theta_deg, d.zoom);
  } else {
    for (auto& frame : out.frames) {
      const AugmentDraw d = draw_augmentation(spec, rng);
      transform_frame(frame, cx, cy, d.theta_deg, d.zoom);
    }
  }
  return out;
}

}  // namespace stimkit::augment
