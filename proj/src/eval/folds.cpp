// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include "stimkit/eval/folds.hpp"

#include <algorithm>
#include <array>

#include "stimkit/error.hpp"
#include "stimkit/rng.hpp"

namespace stimkit::eval {

std::size_t FoldPlan::fold_of(const std::string& subject_id) const {
  auto it = assignments.find(subject_id);
  if (it == assignments.end()) fail(ErrorKind::kConfig, "subject " + subject_id + " has no fold");
  return it->second;
}

std::vector<std::string> FoldPlan::subjects_in(std::size_t fold) const {
  std::vector<std::string> out;
  for (const auto& [subject, f] : assignments) {
    if (f == fold) out.push_back(subject);
  }
  return out;
}

std::size_t window_capacity(int frames, const pose::WindowParams& params) {
  if (frames < params.span()) return 0;
  return static_cast<std::size_t>((frames - params.span()) / params.hop + 1);
}

FoldPlan subject_disjoint_folds(std::span<const pose::ClipRecord> clips,
                                std::span<const std::size_t> clip_windows, std::size_t k,
                                std::uint64_t seed) {
  if (k < 2) fail(ErrorKind::kConfig, "cv.folds must be >= 2, got " + std::to_string(k));
  if (clip_windows.size() != clips.size()) {
    fail(ErrorKind::kShape, "one window count per clip required");
  }
  struct Subject {
    std::string id;
    std::size_t windows = 0;
    std::array<std::size_t, 2> label_windows{};
  };
  std::vector<Subject> subjects;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < clips.size(); ++i) {
    const auto [it, inserted] = index.emplace(clips[i].subject_id, subjects.size());
    if (inserted) subjects.push_back({clips[i].subject_id, 0, {}});
    Subject& s = subjects[it->second];
    s.windows += clip_windows[i];
    if (clips[i].label != pose::Label::kUnset) {
      s.label_windows[static_cast<std::size_t>(clips[i].label)] += clip_windows[i];
    }
  }
  if (subjects.size() < k) {
    fail(ErrorKind::kConfig, "need at least " + std::to_string(k) + " subjects for " +
                                 std::to_string(k) + " folds, found " +
                                 std::to_string(subjects.size()));
  }
  // First-appearance order is manifest order; sort by id so the plan does
  // not depend on how the manifest lists clips.
  std::sort(subjects.begin(), subjects.end(), [](const Subject& a, const Subject& b) { return a.id < b.id; });
  Rng rng(derive_seed(seed, "folds"));
  std::shuffle(subjects.begin(), subjects.end(), rng);
  std::stable_sort(subjects.begin(), subjects.end(),
                   [](const Subject& a, const Subject& b) { return a.windows > b.windows; });

  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.fold_windows.assign(k, 0);
  std::vector<std::size_t> fold_subjects(k, 0);
  std::vector<std::array<std::size_t, 2>> fold_labels(k);
  for (const Subject& s : subjects) {
    std::size_t best = 0;
    for (std::size_t f = 1; f < k; ++f) {
      if (plan.fold_windows[f] < plan.fold_windows[best] ||
          (plan.fold_windows[f] == plan.fold_windows[best] && fold_subjects[f] < fold_subjects[best])) {
        best = f;
      }
    }
    plan.assignments[s.id] = best;
    plan.fold_windows[best] += s.windows;
    ++fold_subjects[best];
    fold_labels[best][0] += s.label_windows[0];
    fold_labels[best][1] += s.label_windows[1];
  }

  std::array<std::size_t, 2> total{};
  for (const auto& fl : fold_labels) {
    total[0] += fl[0];
    total[1] += fl[1];
  }
  for (std::size_t f = 0; f < k; ++f) {
    const std::string name = "fold " + std::to_string(f);
    if (fold_subjects[f] == 1) plan.warnings.push_back(name + " holds a single subject");
    if (plan.fold_windows[f] == 0) plan.warnings.push_back(name + " has no windows");
    for (std::size_t l = 0; l < 2; ++l) {
      if (total[l] - fold_labels[f][l] == 0) {
        plan.warnings.push_back(name + ": training split has no " +
                                std::string(pose::to_string(static_cast<pose::Label>(l))) +
                                " windows");
      }
    }
  }
  return plan;
}

FoldPlan subject_disjoint_folds(std::span<const pose::ClipRecord> clips, std::size_t k,
                                std::uint64_t seed, const pose::WindowParams& params) {
  std::vector<std::size_t> windows;
  for (const auto& c : clips) windows.push_back(window_capacity(c.end_frame - c.start_frame + 1, params));
  return subject_disjoint_folds(clips, windows, k, seed);
}

}  // namespace stimkit::eval
