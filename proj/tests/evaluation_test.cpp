#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <numbers>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

#include "cgaug/augmenters.hpp"
#include "cgaug/cross_validation.hpp"
#include "cgaug/errors.hpp"
#include "cgaug/metrics.hpp"
#include "cgaug/resnet.hpp"
#include "support/signals.hpp"
#include "support/toy.hpp"

namespace {

using namespace cgaug;

constexpr int kSize = 16;

CvConfig toy_cv(std::uint64_t seed = 1) {
  CvConfig c;
  c.n_folds = 5;
  c.seed = seed;
  c.classifier.epochs = 12;
  c.classifier.batch_size = 16;
  c.classifier.learning_rate = 1e-3;
  c.resnet.base_width = 8;
  return c;
}

AugmentationPolicy toy_spec_augment() {
  AugmentationPolicy p;
  p.kind = AugmentationKind::kSpecAugment;
  p.spec_augment.max_freq_width = 3;
  p.spec_augment.max_time_width = 3;
  p.rng_seed = 5;
  return p;
}

std::vector<int> class_counts(std::span<const MelSpectrogram> items, int n_classes) {
  std::vector<int> out(static_cast<std::size_t>(n_classes), 0);
  for (const auto& s : items) ++out[static_cast<std::size_t>(s.label)];
  return out;
}

// Returns items unflagged, which must never pass.
class UnflaggedAugmenter final : public Augmenter {
 public:
  std::string name() const override { return "unflagged"; }
  std::vector<MelSpectrogram> augment(std::span<const MelSpectrogram> train, int, int) override {
    return {train.begin(), train.end()};
  }
};

// Returns one item too few.
class ShortAugmenter final : public Augmenter {
 public:
  std::string name() const override { return "short"; }
  std::vector<MelSpectrogram> augment(std::span<const MelSpectrogram> train, int, int) override {
    std::vector<MelSpectrogram> out(train.begin(), train.end() - 1);
    for (auto& s : out) s.synthetic = true;
    return out;
  }
};

// ---------------------------------------------------------------------------
// Fold construction

TEST(Folds, AugmentedTrainingCountsAreExactlyDoubled) {
  const auto corpus = toy::blob_corpus(7, kSize, 3, 1);
  const auto folds = stratified_folds(corpus.labels(), 3, 5, 11);
  SpecAugmentAugmenter aug(toy_spec_augment());
  NoAugmenter none;
  for (int k = 0; k < 5; ++k) {
    const auto plain = make_fold(corpus, folds, k, none);
    const auto split = make_fold(corpus, folds, k, aug);
    EXPECT_EQ(plain.train_counts, plain.real_train_counts);
    for (std::size_t c = 0; c < 3; ++c) EXPECT_EQ(split.train_counts[c], 2 * split.real_train_counts[c]);
    EXPECT_EQ(class_counts(split.train, 3), split.train_counts);
    // Validation is untouched by augmentation.
    ASSERT_EQ(split.validation.size(), plain.validation.size());
    for (std::size_t i = 0; i < split.validation.size(); ++i) {
      EXPECT_FALSE(split.validation[i].synthetic);
      EXPECT_EQ(split.validation[i].values, plain.validation[i].values);
    }
    // Real part of the training split is unchanged and comes first.
    const auto n_real = plain.train.size();
    for (std::size_t i = 0; i < n_real; ++i) EXPECT_EQ(split.train[i].values, plain.train[i].values);
    for (std::size_t i = n_real; i < split.train.size(); ++i) EXPECT_TRUE(split.train[i].synthetic);
  }
}

TEST(Folds, SyntheticItemInValidationIsCaught) {
  auto corpus = toy::blob_corpus(5, kSize, 2, 1);
  corpus.items[3].synthetic = true;
  const auto folds = stratified_folds(corpus.labels(), 2, 5, 0);
  NoAugmenter none;
  EXPECT_THROW(make_fold(corpus, folds, folds[3], none), LeakageError);
  const int other = (folds[3] + 1) % 5;
  EXPECT_NO_THROW(make_fold(corpus, folds, other, none));

  std::vector<MelSpectrogram> items(2);
  EXPECT_NO_THROW(assert_no_synthetic(items));
  items[1].synthetic = true;
  EXPECT_THROW(assert_no_synthetic(items), LeakageError);
}

TEST(Folds, AugmenterContractIsEnforced) {
  const auto corpus = toy::blob_corpus(5, kSize, 2, 1);
  const auto folds = stratified_folds(corpus.labels(), 2, 5, 0);
  UnflaggedAugmenter unflagged;
  ShortAugmenter short_aug;
  EXPECT_THROW(make_fold(corpus, folds, 0, unflagged), LeakageError);
  EXPECT_THROW(make_fold(corpus, folds, 0, short_aug), ValidationError);
  const std::vector<int> wrong(3, 0);
  NoAugmenter none;
  EXPECT_THROW(make_fold(corpus, wrong, 0, none), ValidationError);
}

TEST(Folds, EveryItemValidatesExactlyOnce) {
  const auto corpus = toy::blob_corpus(9, kSize, 2, 2);
  const auto folds = stratified_folds(corpus.labels(), 2, 5, 3);
  NoAugmenter none;
  std::map<std::string, int> seen;
  std::size_t total = 0;
  for (int k = 0; k < 5; ++k) {
    const auto split = make_fold(corpus, folds, k, none);
    EXPECT_EQ(split.train.size() + split.validation.size(), corpus.items.size());
    for (const auto& s : split.validation) ++seen[s.source_id];
    total += split.validation.size();
  }
  EXPECT_EQ(total, corpus.items.size());
  for (const auto& [id, n] : seen) EXPECT_EQ(n, 1) << id;
}

// ---------------------------------------------------------------------------
// Augmenters

TEST(SpecAugmentAugmenterTest, MasksCopiesAndIsDeterministicPerFold) {
  const auto corpus = toy::blob_corpus(4, kSize, 2, 1);
  SpecAugmentAugmenter aug(toy_spec_augment());
  const auto a = aug.augment(corpus.items, 2, 0);
  const auto b = aug.augment(corpus.items, 2, 0);
  const auto c = aug.augment(corpus.items, 2, 1);
  ASSERT_EQ(a.size(), corpus.items.size());
  bool fold_differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_TRUE(a[i].synthetic);
    EXPECT_EQ(a[i].label, corpus.items[i].label);
    EXPECT_EQ(a[i].values, b[i].values);
    fold_differs = fold_differs || a[i].values != c[i].values;
    // Every changed cell sits in a constant (masked) mel row or frame column.
    const auto& out = a[i];
    auto row_constant = [&](int m) {
      for (int t = 1; t < kSize; ++t)
        if (out.at(m, t) != out.at(m, 0)) return false;
      return true;
    };
    auto col_constant = [&](int t) {
      for (int m = 1; m < kSize; ++m)
        if (out.at(m, t) != out.at(0, t)) return false;
      return true;
    };
    for (int m = 0; m < kSize; ++m)
      for (int t = 0; t < kSize; ++t)
        if (out.at(m, t) != corpus.items[i].at(m, t)) EXPECT_TRUE(row_constant(m) || col_constant(t));
  }
  EXPECT_TRUE(fold_differs);
  AugmentationPolicy noise;
  noise.kind = AugmentationKind::kWhiteNoise;
  EXPECT_THROW(SpecAugmentAugmenter{noise}, ValidationError);
}

TEST(GanAugmenterTest, MatchesTrainingCountsPerFold) {
  torch::manual_seed(0);
  GanAugmenter aug(Generator(toy::generator_spec(kSize, 3)), 17);
  const auto corpus = toy::blob_corpus(4, kSize, 3, 1);
  std::vector<MelSpectrogram> train(corpus.items.begin(), corpus.items.begin() + 9);
  const auto a = aug.augment(train, 3, 2);
  EXPECT_EQ(class_counts(a, 3), class_counts(train, 3));
  for (const auto& s : a) EXPECT_TRUE(s.synthetic);
  const auto b = aug.augment(train, 3, 2);
  const auto c = aug.augment(train, 3, 3);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i].values, b[i].values);
  EXPECT_NE(a[0].values, c[0].values);
  EXPECT_THROW(aug.augment(train, 4, 0), ValidationError);
}

class WaveformAugmenterTest : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_.sample_rate = 22050;
    cfg_.fmax = 11025.0;
    const double freqs[] = {440.0, 2500.0};
    for (int c = 0; c < 2; ++c) {
      for (int i = 0; i < 2; ++i) {
        AudioClip clip;
        clip.sample_rate = cfg_.sample_rate;
        clip.label = c;
        clip.source_id = "mem://" + std::to_string(c) + "/" + std::to_string(i);
        clip.samples = testing_support::sine(freqs[c] * (1.0 + 0.05 * i), cfg_.sample_rate, 40000, 0.5);
        clips_[clip.source_id] = clip;
        for (auto& s : compute_mel_spectrograms(clip, cfg_)) raw_.push_back(std::move(s));
      }
    }
    stats_ = fit_normalization(raw_);
    for (const auto& s : raw_) items_.push_back(normalize(s, stats_));
  }

  ClipSource source() {
    return [this](const std::string& id, int) {
      ++lookups_;
      return clips_.at(id);
    };
  }

  SpectrogramConfig cfg_;
  std::map<std::string, AudioClip> clips_;
  std::vector<MelSpectrogram> raw_, items_;
  NormalizationStats stats_;
  int lookups_ = 0;
};

TEST_F(WaveformAugmenterTest, EachPolicyReturnsOneNormalizedWindowPerItem) {
  ASSERT_GE(items_.size(), 8u);
  for (auto kind : {AugmentationKind::kWhiteNoise, AugmentationKind::kPitchShift, AugmentationKind::kTimeStretch}) {
    AugmentationPolicy p;
    p.kind = kind;
    WaveformAugmenter aug(p, cfg_, stats_, source());
    const auto out = aug.augment(items_, 2, 0);
    ASSERT_EQ(out.size(), items_.size()) << to_string(kind);
    for (std::size_t i = 0; i < out.size(); ++i) {
      EXPECT_TRUE(out[i].synthetic);
      EXPECT_TRUE(out[i].normalized);
      EXPECT_EQ(out[i].label, items_[i].label);
      EXPECT_EQ(out[i].n_mels, cfg_.n_mels);
      EXPECT_EQ(out[i].n_frames, cfg_.frames_per_window);
      for (float v : out[i].values) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST_F(WaveformAugmenterTest, QuietNoiseLeavesStrongCellsNearlyUnchanged) {
  AugmentationPolicy p;
  p.kind = AugmentationKind::kWhiteNoise;
  p.snr_db_min = p.snr_db_max = 60.0;
  WaveformAugmenter aug(p, cfg_, stats_, source());
  const auto out = aug.augment(items_, 2, 0);
  // Cells within 30 dB of the window peak carry at least 1e3 times the noise
  // power per bin, so their log value moves by far less than 0.05.
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto orig = denormalize(items_[i], stats_);
    const auto noisy = denormalize(out[i], stats_);
    const float peak = *std::max_element(orig.values.begin(), orig.values.end());
    int strong = 0;
    for (std::size_t k = 0; k < orig.values.size(); ++k) {
      if (orig.values[k] < peak - 3.0 * std::log(10.0)) continue;
      ++strong;
      EXPECT_NEAR(noisy.values[k], orig.values[k], 0.05);
    }
    EXPECT_GT(strong, 0);
    EXPECT_NE(out[i].values, items_[i].values);
  }
}

TEST_F(WaveformAugmenterTest, PitchShiftMovesTheDominantMelBin) {
  AugmentationPolicy p;
  p.kind = AugmentationKind::kPitchShift;
  p.semitones_min = p.semitones_max = 12.0;
  WaveformAugmenter aug(p, cfg_, stats_, source());
  const auto out = aug.augment(items_, 2, 0);
  auto peak_bin = [](const MelSpectrogram& s) {
    std::vector<double> row(static_cast<std::size_t>(s.n_mels), 0.0);
    for (int m = 0; m < s.n_mels; ++m)
      for (int t = 0; t < s.n_frames; ++t) row[static_cast<std::size_t>(m)] += s.at(m, t);
    return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  };
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_GT(peak_bin(out[i]), peak_bin(items_[i]));
}

TEST_F(WaveformAugmenterTest, ClipsAreLoadedOncePerSource) {
  AugmentationPolicy p;
  p.kind = AugmentationKind::kWhiteNoise;
  WaveformAugmenter aug(p, cfg_, stats_, source());
  aug.augment(items_, 2, 0);
  aug.augment(items_, 2, 1);
  EXPECT_EQ(lookups_, static_cast<int>(clips_.size()));

  auto orphan = items_;
  orphan[0].source_id.clear();
  WaveformAugmenter fresh(p, cfg_, stats_, source());
  EXPECT_THROW(fresh.augment(orphan, 2, 0), ValidationError);
  EXPECT_THROW(WaveformAugmenter(toy_spec_augment(), cfg_, stats_, source()), ValidationError);
}

// ---------------------------------------------------------------------------
// Cross-validation

TEST(CrossValidation, SeparableToyReachesNearPerfectF1) {
  const auto corpus = toy::blob_corpus(30, kSize, 2, 4);
  NoAugmenter none;
  std::vector<int> reported;
  const auto report = run_cv_experiment(corpus, none, toy_cv(), [&](int k, double) { reported.push_back(k); });
  ASSERT_EQ(report.per_fold_f1.size(), 5u);
  EXPECT_EQ(reported, (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_GT(report.mean, 0.99);
  EXPECT_NEAR(report.mean, mean(report.per_fold_f1), 1e-15);
  EXPECT_NEAR(report.std, sample_std(report.per_fold_f1), 1e-15);
  EXPECT_EQ(report.augmentation_name, "none");
}

TEST(CrossValidation, StrategiesShareFoldsAndAugmentedRunsDoubleCounts) {
  const auto corpus = toy::blob_corpus(6, kSize, 2, 4);
  auto cfg = toy_cv(9);
  cfg.classifier.epochs = 1;
  NoAugmenter none;
  SpecAugmentAugmenter spec(toy_spec_augment());
  const auto base = run_cv_experiment(corpus, none, cfg);
  const auto aug = run_cv_experiment(corpus, spec, cfg);
  EXPECT_EQ(base.folds, aug.folds);
  ASSERT_EQ(base.train_counts.size(), 5u);
  for (std::size_t k = 0; k < 5; ++k)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(aug.train_counts[k][c], 2 * base.train_counts[k][c]);
  EXPECT_NO_THROW(relative_improvement(aug, base));
}

TEST(CrossValidation, IdenticalSeedsReproduceReports) {
  const auto corpus = toy::blob_corpus(6, kSize, 2, 4);
  auto cfg = toy_cv(3);
  cfg.classifier.epochs = 2;
  NoAugmenter none;
  const auto a = run_cv_experiment(corpus, none, cfg);
  const auto b = run_cv_experiment(corpus, none, cfg);
  EXPECT_EQ(a.per_fold_f1, b.per_fold_f1);
  EXPECT_EQ(a.folds, b.folds);
}

TEST(CrossValidation, RejectsUnnormalizedOrEmptyCorpora) {
  NoAugmenter none;
  SpectrogramCorpus empty;
  EXPECT_THROW(run_cv_experiment(empty, none, toy_cv()), ValidationError);
  auto raw = toy::blob_corpus(5, kSize, 2, 1);
  raw.stats.reset();
  EXPECT_THROW(run_cv_experiment(raw, none, toy_cv()), ValidationError);
  auto tiny = toy::blob_corpus(3, kSize, 2, 1);
  EXPECT_THROW(run_cv_experiment(tiny, none, toy_cv()), ValidationError);
}

CvReport synthetic_report(std::vector<double> f1, std::vector<int> folds) {
  CvReport r;
  r.per_fold_f1 = std::move(f1);
  r.mean = mean(r.per_fold_f1);
  r.std = sample_std(r.per_fold_f1);
  r.folds = std::move(folds);
  r.n_folds = 5;
  return r;
}

TEST(RelativeImprovement, IsPercentagePointDifferenceOfMeans) {
  const std::vector<int> folds{0, 1, 2, 3, 4, 0, 1, 2, 3, 4};
  const auto base = synthetic_report({0.939, 0.939, 0.939, 0.939, 0.939}, folds);
  const auto gan = synthetic_report({0.9674, 0.9674, 0.9674, 0.9674, 0.9674}, folds);
  EXPECT_NEAR(relative_improvement(gan, base), 2.84, 1e-9);
  EXPECT_NEAR(relative_improvement(base, gan), -2.84, 1e-9);
  EXPECT_EQ(relative_improvement(base, base), 0.0);

  const auto noise = synthetic_report({0.70, 0.72, 0.68, 0.71, 0.69}, folds);
  EXPECT_NEAR(relative_improvement(noise, base), 100.0 * (0.70 - 0.939), 1e-9);
}

TEST(RelativeImprovement, RejectsReportsFromDifferentFolds) {
  const auto a = synthetic_report({0.9, 0.9, 0.9, 0.9, 0.9}, {0, 1, 2, 3, 4, 0});
  const auto b = synthetic_report({0.9, 0.9, 0.9, 0.9, 0.9}, {1, 0, 2, 3, 4, 0});
  EXPECT_THROW(relative_improvement(a, b), ValidationError);
  auto c = a;
  c.per_fold_f1.pop_back();
  EXPECT_THROW(relative_improvement(a, c), ValidationError);
}

TEST(CvReportJson, RoundTrips) {
  auto r = synthetic_report({0.9, 0.8, 0.85, 0.95, 0.7}, {0, 1, 2, 3, 4});
  r.augmentation_name = "gan_proposed";
  r.relative_improvement = 1.5;
  r.fid = 12.25;
  r.seed = 77;
  r.train_counts = {{4, 4}, {4, 4}, {4, 4}, {4, 4}, {4, 4}};
  r.config_hash = "00ff00ff00ff00ff";
  const nlohmann::json j = r;
  const auto back = j.get<CvReport>();
  EXPECT_EQ(back.augmentation_name, r.augmentation_name);
  EXPECT_EQ(back.per_fold_f1, r.per_fold_f1);
  EXPECT_EQ(back.relative_improvement, r.relative_improvement);
  EXPECT_EQ(back.fid, r.fid);
  EXPECT_EQ(back.folds, r.folds);
  EXPECT_EQ(back.train_counts, r.train_counts);
  EXPECT_EQ(back.config_hash, r.config_hash);
  EXPECT_EQ(back.seed, 77u);
}

TEST(CvConfigJson, RejectsUnknownKeysAndTooFewFolds) {
  nlohmann::json j = CvConfig{};
  EXPECT_NO_THROW(j.get<CvConfig>());
  auto bad = j;
  bad["nfolds"] = 3;
  EXPECT_THROW(bad.get<CvConfig>(), ValidationError);
  auto one = j;
  one["n_folds"] = 1;
  EXPECT_THROW(one.get<CvConfig>(), ValidationError);
}

// ---------------------------------------------------------------------------
// Feature extractor

TEST(FeatureExtractorTest, LearnsSeparableToyAndIsFrozen) {
  const auto corpus = toy::blob_corpus(20, kSize, 2, 8);
  ResNetSpec spec;
  spec.base_width = 8;
  spec.n_classes = 2;
  ClassifierConfig cc;
  cc.epochs = 10;
  cc.batch_size = 16;
  cc.learning_rate = 1e-3;
  cc.seed = 3;
  std::vector<double> history;
  const auto fx = train_feature_extractor(corpus, spec, cc, &history);
  ASSERT_EQ(history.size(), 10u);
  EXPECT_GT(history.back(), 0.95);

  const auto x = stack_spectrograms(corpus.items);
  const auto a = fx.extract(x);
  EXPECT_EQ(a.rows(), static_cast<Eigen::Index>(corpus.items.size()));
  EXPECT_EQ(a.cols(), 64);
  EXPECT_EQ(fx.feature_dim(), 64);
  EXPECT_TRUE((a.array() >= 0.0).all());  // pooled post-ReLU activations
  EXPECT_EQ(a, fx.extract(x));
  EXPECT_EQ(a, fx.extract(x, 7));  // batch size does not matter in eval mode
  for (const auto& p : fx.network()->parameters()) EXPECT_FALSE(p.requires_grad());

  testing_support::TempDir tmp("fx");
  fx.save(tmp.path());
  const auto loaded = FeatureExtractor::load(tmp.path());
  EXPECT_EQ(loaded.extract(x), a);
}

}  // namespace
