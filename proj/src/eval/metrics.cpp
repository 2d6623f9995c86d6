// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/eval/metrics.hpp"

#include <string>

#include "stimkit/error.hpp"

namespace stimkit::eval {

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  tn += o.tn;
  return *this;
}

ConfusionMatrix confusion(std::span<const double> probabilities,
                          std::span<const pose::Label> labels, double threshold) {
  if (probabilities.size() != labels.size()) {
    fail(ErrorKind::kShape, "confusion: " + std::to_string(probabilities.size()) +
                                " predictions for " + std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == pose::Label::kUnset) fail(ErrorKind::kConfig, "confusion: unset label");
    const bool predicted = probabilities[i] > threshold;
    const bool actual = labels[i] == pose::Label::kPositive;
    if (predicted && actual) {
      ++cm.tp;
    } else if (predicted) {
      ++cm.fp;
    } else if (actual) {
      ++cm.fn;
    } else {
      ++cm.tn;
    }
  }
  return cm;
}

Metrics precision_recall_f1(const ConfusionMatrix& cm) {
  Metrics m;
  auto ratio = [&m](double num, double den) {
    if (den == 0.0) {
      m.degenerate = true;
      return 0.0;
    }
    return num / den;
  };
  m.precision = ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp));
  m.recall = ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn));
  m.f1 = ratio(2.0 * m.precision * m.recall, m.precision + m.recall);
  return m;
}

double mean_f1(std::span<const double> fold_f1) {
  if (fold_f1.empty()) return 0.0;
  double sum = 0.0;
  for (double f : fold_f1) sum += f;
  return sum / static_cast<double>(fold_f1.size());
}

}  // namespace stimkit::eval
