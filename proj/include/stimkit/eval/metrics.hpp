// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>

#include "stimkit/pose/types.hpp"

namespace stimkit::eval {

struct ConfusionMatrix {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  ConfusionMatrix& operator+=(const ConfusionMatrix& o);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Positive means p > threshold; p == threshold counts as negative.
/// Throws kShape when the lengths differ and kConfig on an unset label.
ConfusionMatrix confusion(std::span<const double> probabilities,
                          std::span<const pose::Label> labels, double threshold = 0.5);

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool degenerate = false;  // some ratio was 0/0 and was reported as 0

  friend bool operator==(const Metrics&, const Metrics&) = default;
};

Metrics precision_recall_f1(const ConfusionMatrix& cm);

/// Arithmetic mean of per-fold F1 scores; 0 for an empty list.
double mean_f1(std::span<const double> fold_f1);

}  // namespace stimkit::eval
