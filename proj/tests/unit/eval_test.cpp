// Copyright 2026 The stimkit Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <memory>
#include <numeric>
#include <random>
#include <set>

#include "gtest/gtest.h"
#include "stimkit/error.hpp"
#include "stimkit/eval/cross_validate.hpp"
#include "stimkit/eval/folds.hpp"
#include "stimkit/eval/metrics.hpp"
#include "stimkit/pose/manifest.hpp"
#include "stimkit/synth/synthgen.hpp"
#include "test_util.hpp"

namespace stimkit::eval {
namespace {

using pose::Label;

template <typename F>
ErrorKind kind_of(F f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no stimkit::Error thrown";
  return ErrorKind::kIo;
}

// ---- metrics ---------------------------------------------------------------

TEST(Confusion, DirectCount) {
  const std::vector<double> p{0.9, 0.9, 0.2, 0.6};
  const std::vector<Label> y{Label::kPositive, Label::kPositive, Label::kNegative, Label::kNegative};
  EXPECT_EQ(confusion(p, y), (ConfusionMatrix{2, 1, 0, 1}));
}

TEST(Confusion, TieAtThresholdIsNegative) {
  const std::vector<double> p{0.5, 0.5};
  const std::vector<Label> y{Label::kPositive, Label::kNegative};
  EXPECT_EQ(confusion(p, y), (ConfusionMatrix{0, 0, 1, 1}));
}

TEST(Confusion, AllCorrectAndEmpty) {
  const std::vector<double> p{0.7, 0.1, 0.99};
  const std::vector<Label> y{Label::kPositive, Label::kNegative, Label::kPositive};
  const ConfusionMatrix cm = confusion(p, y);
  EXPECT_EQ(cm.fp + cm.fn, 0u);
  EXPECT_EQ(cm.total(), 3u);
  EXPECT_EQ(confusion({}, {}), ConfusionMatrix{});
}

TEST(Confusion, Errors) {
  const std::vector<double> p{0.7};
  EXPECT_EQ(kind_of([&] { confusion(p, std::vector<Label>{}); }), ErrorKind::kShape);
  EXPECT_EQ(kind_of([&] { confusion(p, std::vector<Label>{Label::kUnset}); }), ErrorKind::kConfig);
}

TEST(Metrics, Formula) {
  const Metrics perfect = precision_recall_f1({3, 0, 0, 5});
  EXPECT_EQ(perfect.f1, 1.0);
  EXPECT_FALSE(perfect.degenerate);

  const Metrics m = precision_recall_f1({2, 1, 1, 0});
  EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3);
  EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3);
  EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3);

  const Metrics empty = precision_recall_f1({0, 0, 0, 9});
  EXPECT_EQ(empty.f1, 0.0);
  EXPECT_TRUE(empty.degenerate);
}

TEST(Metrics, MatchesHarmonicMeanOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> n(1, 50);
  for (int i = 0; i < 200; ++i) {
    const ConfusionMatrix cm{n(rng), n(rng), n(rng), n(rng)};
    const double p = double(cm.tp) / double(cm.tp + cm.fp);
    const double r = double(cm.tp) / double(cm.tp + cm.fn);
    EXPECT_NEAR(precision_recall_f1(cm).f1, 2 * p * r / (p + r), 1e-15);
  }
}

TEST(Metrics, InvariantToPredictionOrder) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::pair<double, Label>> rows;
    for (int i = 0; i < 40; ++i) rows.emplace_back(u(rng), u(rng) < 0.5 ? Label::kPositive : Label::kNegative);
    auto eval = [](const auto& r) {
      std::vector<double> p;
      std::vector<Label> y;
      for (const auto& [a, b] : r) {
        p.push_back(a);
        y.push_back(b);
      }
      return precision_recall_f1(confusion(p, y));
    };
    const Metrics before = eval(rows);
    std::shuffle(rows.begin(), rows.end(), rng);
    EXPECT_EQ(eval(rows), before);
  }
}

TEST(MeanF1, PublishedFoldScores) {
  const std::vector<double> folds{0.833, 0.890, 1.000};
  EXPECT_NEAR(mean_f1(folds), 0.9077, 5e-5);
  EXPECT_EQ(mean_f1({}), 0.0);
}

// ---- folds -----------------------------------------------------------------

std::vector<pose::ClipRecord> clips_for(const std::vector<std::pair<std::string, Label>>& spec) {
  std::vector<pose::ClipRecord> out;
  for (std::size_t i = 0; i < spec.size(); ++i) {
    pose::ClipRecord c;
    c.clip_id = "c" + std::to_string(i);
    c.subject_id = spec[i].first;
    c.label = spec[i].second;
    c.end_frame = 89;
    out.push_back(c);
  }
  return out;
}

TEST(Folds, SixEqualSubjectsTwoPerFold) {
  std::vector<std::pair<std::string, Label>> spec;
  for (int s = 0; s < 6; ++s) {
    spec.emplace_back("s" + std::to_string(s), Label::kPositive);
    spec.emplace_back("s" + std::to_string(s), Label::kNegative);
  }
  const auto clips = clips_for(spec);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FoldPlan plan = subject_disjoint_folds(clips, 3, seed);
    for (std::size_t f = 0; f < 3; ++f) EXPECT_EQ(plan.subjects_in(f).size(), 2u);
    EXPECT_EQ(plan.assignments.size(), 6u);
    EXPECT_TRUE(plan.warnings.empty());
  }
}

TEST(Folds, DominantSubjectSitsAlone) {
  std::vector<std::pair<std::string, Label>> spec;
  std::vector<std::size_t> windows;
  spec.emplace_back("big", Label::kPositive);
  windows.push_back(90);
  for (int s = 0; s < 5; ++s) {
    spec.emplace_back("s" + std::to_string(s), s % 2 ? Label::kPositive : Label::kNegative);
    windows.push_back(2);
  }
  const auto clips = clips_for(spec);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const FoldPlan plan = subject_disjoint_folds(clips, windows, 3, seed);
    const std::size_t f = plan.fold_of("big");
    EXPECT_EQ(plan.subjects_in(f), std::vector<std::string>{"big"});
    std::vector<std::size_t> others;
    for (std::size_t g = 0; g < 3; ++g) {
      if (g != f) others.push_back(plan.fold_windows[g]);
    }
    EXPECT_LE(std::max(others[0], others[1]) - std::min(others[0], others[1]), 2u);
  }
}

TEST(Folds, RejectsKBelowTwoAndTooFewSubjects) {
  const auto clips = clips_for({{"a", Label::kPositive}, {"b", Label::kNegative}});
  EXPECT_EQ(kind_of([&] { subject_disjoint_folds(clips, 1, 0); }), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([&] { subject_disjoint_folds(clips, 3, 0); }), ErrorKind::kConfig);
}

TEST(Folds, PropertyDisjointCompleteDeterministic) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t k = 2 + rng() % 4;
    const std::size_t subjects = k + rng() % 8;
    std::vector<std::pair<std::string, Label>> spec;
    std::vector<std::size_t> windows;
    for (std::size_t s = 0; s < subjects; ++s) {
      const std::size_t clips = 1 + rng() % 4;
      for (std::size_t c = 0; c < clips; ++c) {
        spec.emplace_back("subj" + std::to_string(s), rng() % 2 ? Label::kPositive : Label::kNegative);
        windows.push_back(1 + rng() % 10);
      }
    }
    const auto clips = clips_for(spec);
    const FoldPlan plan = subject_disjoint_folds(clips, windows, k, trial);
    EXPECT_EQ(plan.assignments.size(), subjects);
    std::size_t total = 0;
    for (std::size_t f = 0; f < k; ++f) {
      EXPECT_FALSE(plan.subjects_in(f).empty());
      total += plan.fold_windows[f];
    }
    EXPECT_EQ(total, std::accumulate(windows.begin(), windows.end(), std::size_t{0}));
    // Clip order in the input does not matter.
    std::vector<std::size_t> perm(clips.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<pose::ClipRecord> c2;
    std::vector<std::size_t> w2;
    for (std::size_t i : perm) {
      c2.push_back(clips[i]);
      w2.push_back(windows[i]);
    }
    EXPECT_EQ(subject_disjoint_folds(c2, w2, k, trial).assignments, plan.assignments);
  }
}

TEST(Folds, WindowCapacity) {
  const pose::WindowParams p;  // span 31, hop 15
  EXPECT_EQ(window_capacity(30, p), 0u);
  EXPECT_EQ(window_capacity(31, p), 1u);
  EXPECT_EQ(window_capacity(90, p), 4u);
}

TEST(Folds, WarnsOnSingleSubjectAndSingleLabelSplits) {
  const auto clips = clips_for({{"a", Label::kPositive}, {"b", Label::kNegative}});
  const FoldPlan plan = subject_disjoint_folds(clips, 2, 0);
  std::string all;
  for (const auto& w : plan.warnings) all += w + "\n";
  EXPECT_NE(all.find("single subject"), std::string::npos);
  EXPECT_NE(all.find("training split has no"), std::string::npos);
}

// ---- cross-validation ------------------------------------------------------

struct TinyData {
  test::TempDir dir;
  WindowDataset data;
};

// Small synthetic dataset on a 16x16 raster; each subject holds both labels.
std::unique_ptr<TinyData> tiny(std::size_t subjects, std::uint64_t seed = 3) {
  auto t = std::make_unique<TinyData>();
  synth::SynthConfig sc;
  sc.subjects = subjects;
  sc.clips_per_subject = 2;
  sc.frames_per_clip = 46;
  sc.seed = seed;
  const auto manifest_path = synth::gen_dataset(sc, t->dir.path());
  t->data = load_dataset(pose::load_manifest(manifest_path), pose::WindowParams{}, 0.1);
  return t;
}

CvOptions tiny_options(std::size_t folds) {
  CvOptions o;
  o.folds = folds;
  o.seed = 4;
  o.raster.width = o.raster.height = 16;
  o.model.width = o.model.height = 16;
  o.model.conv_blocks = {{4, 3, 2}};
  o.model.frame_embedding = 8;
  o.model.lstm_hidden = 4;
  o.train.epochs = 2;
  o.train.learning_rate = 1e-3;
  o.train.threads = 1;
  o.augment = augment::AugmentSpec{};
  return o;
}

TEST(CrossValidate, DisjointCompleteAndAggregated) {
  const auto t = tiny(6);
  ASSERT_EQ(t->data.windows.size(), 12u * 2);
  const CvReport r = cross_validate(t->data, tiny_options(3));
  ASSERT_EQ(r.per_fold.size(), 3u);
  std::set<std::string> seen_subjects;
  std::size_t evaluated = 0;
  double sum = 0;
  for (const FoldResult& f : r.per_fold) {
    for (const auto& s : f.test_subjects) EXPECT_TRUE(seen_subjects.insert(s).second) << s;
    EXPECT_EQ(f.confusion.total(), f.test_windows);
    EXPECT_EQ(f.train_windows + f.test_windows, t->data.windows.size());
    EXPECT_EQ(f.loss_history.size(), 2u);
    evaluated += f.test_windows;
    sum += f.metrics.f1;
  }
  EXPECT_EQ(seen_subjects.size(), 6u);
  EXPECT_EQ(evaluated, t->data.windows.size());
  EXPECT_NEAR(r.mean_f1, sum / 3, 1e-12);

  // Each window is predicted once, in a fold that holds its subject.
  std::set<std::pair<std::string, int>> keys;
  for (const WindowPrediction& p : r.predictions) {
    EXPECT_TRUE(keys.emplace(p.clip_id, p.origin_frame).second);
    const auto& subjects = r.per_fold[p.fold].test_subjects;
    EXPECT_NE(std::find(subjects.begin(), subjects.end(), p.subject_id), subjects.end());
  }
  EXPECT_EQ(keys.size(), t->data.windows.size());
}

TEST(CrossValidate, BitIdenticalOnRepeat) {
  const auto t = tiny(4);
  const CvOptions o = tiny_options(2);
  const CvReport a = cross_validate(t->data, o);
  const CvReport b = cross_validate(t->data, o);
  EXPECT_EQ(report_to_json(a).dump(), report_to_json(b).dump());
  EXPECT_EQ(predictions_csv(a), predictions_csv(b));
  for (std::size_t f = 0; f < 2; ++f) {
    EXPECT_EQ(nn::serialize_checkpoint(a.per_fold[f].checkpoint), nn::serialize_checkpoint(b.per_fold[f].checkpoint));
  }
}

TEST(CrossValidate, TwoSubjectsTwoFoldsRunsAndWarns) {
  const auto t = tiny(2);
  const CvReport r = cross_validate(t->data, tiny_options(2));
  EXPECT_EQ(r.per_fold.size(), 2u);
  const bool warned = std::any_of(r.warnings.begin(), r.warnings.end(),
                                  [](const std::string& w) { return w.find("single subject") != std::string::npos; });
  EXPECT_TRUE(warned);
}

TEST(CrossValidate, SingleLabelTrainingSplitNamesFold) {
  auto t = tiny(2);
  // One subject per class: each training split holds one label only.
  for (auto& w : t->data.windows) w.label = w.subject_id == "synth_000" ? Label::kPositive : Label::kNegative;
  for (auto& c : t->data.clips) c.clip.label = c.clip.subject_id == "synth_000" ? Label::kPositive : Label::kNegative;
  try {
    cross_validate(t->data, tiny_options(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kConfig);
    EXPECT_NE(std::string(e.what()).find("fold 0"), std::string::npos);
  }
}

TEST(CrossValidate, MismatchedModelInputIsConfigError) {
  const auto t = tiny(2);
  CvOptions o = tiny_options(2);
  o.raster.width = 32;
  EXPECT_EQ(kind_of([&] { cross_validate(t->data, o); }), ErrorKind::kConfig);
}

TEST(CvReport, AggregateIsArithmeticMean) {
  CvReport r;
  for (double f1 : {0.833, 0.890, 1.000}) {
    FoldResult f;
    f.metrics.f1 = f1;
    f.clip_metrics.f1 = f1 / 2;
    r.per_fold.push_back(f);
  }
  r.aggregate();
  EXPECT_NEAR(r.mean_f1, (0.833 + 0.890 + 1.000) / 3, 1e-12);
  EXPECT_NEAR(r.clip_mean_f1, (0.833 + 0.890 + 1.000) / 6, 1e-12);
}

TEST(CvReport, PredictionsCsvRoundTripsProbabilities) {
  CvReport r;
  r.predictions.push_back({1, "clip_a", "s1", 15, Label::kPositive, 0.1 + 0.2});
  r.predictions.push_back({0, "clip_b", "s2", 0, Label::kNegative, 0.5});
  const std::string csv = predictions_csv(r);
  EXPECT_EQ(csv,
            "fold,clip_id,subject_id,origin_frame,label,probability,predicted\n"
            "1,clip_a,s1,15,positive,0.30000000000000004,0\n"
            "0,clip_b,s2,0,negative,0.5,0\n");
}

}  // namespace
}  // namespace stimkit::eval
