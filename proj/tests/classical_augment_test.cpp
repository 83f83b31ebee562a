#include "cgaug/classical_augment.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "cgaug/errors.hpp"
#include "support/signals.hpp"

using namespace cgaug;
using testing_support::dft_peak;
using testing_support::sine;

namespace {

constexpr int kRate = 22050;

AudioClip sine_clip(double freq, double seconds, double amplitude = 0.5) {
  AudioClip c;
  c.samples = sine(freq, kRate, static_cast<std::size_t>(seconds * kRate), amplitude);
  c.sample_rate = kRate;
  c.label = 4;
  c.source_id = "sine";
  return c;
}

double power(const std::vector<float>& x) {
  double s = 0.0;
  for (float v : x) s += static_cast<double>(v) * v;
  return s / static_cast<double>(x.size());
}

// Peak frequency over a centred half-second excerpt.
double peak(const AudioClip& c, double lo, double hi) {
  const std::size_t n = kRate / 2;
  const std::size_t start = (c.samples.size() - n) / 2;
  return dft_peak(std::vector<float>(c.samples.begin() + static_cast<std::ptrdiff_t>(start),
                                     c.samples.begin() + static_cast<std::ptrdiff_t>(start + n)),
                  kRate, lo, hi, 0.5);
}

MelSpectrogram random_spec(std::uint64_t seed, bool normalized = true, float offset = 0.0f) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<float> d(offset, 1.0f);
  MelSpectrogram s;
  s.n_mels = 64;
  s.n_frames = 64;
  s.label = 2;
  s.normalized = normalized;
  s.values.resize(64 * 64);
  for (auto& v : s.values) v = d(rng);
  return s;
}

}  // namespace

TEST(WhiteNoise, InfiniteSnrIsIdentity) {
  const auto c = sine_clip(440.0, 0.5);
  const auto out = add_white_noise(c, kNoNoise, 1);
  EXPECT_EQ(out.samples, c.samples);
  EXPECT_EQ(out.label, c.label);
}

TEST(WhiteNoise, ZeroDbNoiseMatchesSignalPower) {
  const auto c = sine_clip(440.0, 1.0, 0.1);
  const auto out = add_white_noise(c, 0.0, 2);
  std::vector<float> noise(c.samples.size());
  for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = out.samples[i] - c.samples[i];
  EXPECT_NEAR(power(noise) / power(c.samples), 1.0, 0.02);
  EXPECT_EQ(out.samples.size(), c.samples.size());
}

TEST(WhiteNoise, RealizedSnrWithinTenthOfDecibel) {
  const auto c = sine_clip(300.0, 1.0, 0.3);
  for (double snr : {10.0, 20.0, 30.0}) {
    const auto out = add_white_noise(c, snr, 3);
    std::vector<float> noise(c.samples.size());
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = out.samples[i] - c.samples[i];
    EXPECT_NEAR(10.0 * std::log10(power(c.samples) / power(noise)), snr, 0.1);
  }
}

TEST(WhiteNoise, ClippedAndSilentRejected) {
  const auto loud = sine_clip(440.0, 0.25, 0.99);
  const auto out = add_white_noise(loud, -5.0, 4);
  for (float v : out.samples) ASSERT_LE(std::abs(v), 1.0f);
  AudioClip silent = loud;
  std::fill(silent.samples.begin(), silent.samples.end(), 0.0f);
  EXPECT_THROW(add_white_noise(silent, 10.0, 5), ValidationError);
}

TEST(WhiteNoise, SeedsControlTheDraw) {
  const auto c = sine_clip(440.0, 0.25);
  EXPECT_EQ(add_white_noise(c, 15.0, 6).samples, add_white_noise(c, 15.0, 6).samples);
  EXPECT_NE(add_white_noise(c, 15.0, 6).samples, add_white_noise(c, 15.0, 7).samples);
}

TEST(PitchShift, ZeroSemitonesKeepsPeak) {
  const auto c = sine_clip(440.0, 1.0);
  const auto out = pitch_shift(c, 0.0);
  EXPECT_EQ(out.samples.size(), c.samples.size());
  EXPECT_NEAR(peak(out, 400.0, 480.0), 440.0, 440.0 * 0.01);
}

TEST(PitchShift, OctaveUpAndDown) {
  const auto c = sine_clip(440.0, 1.5);
  const auto up = pitch_shift(c, 12.0);
  const auto down = pitch_shift(c, -12.0);
  EXPECT_EQ(up.samples.size(), c.samples.size());
  EXPECT_EQ(down.samples.size(), c.samples.size());
  EXPECT_NEAR(peak(up, 150.0, 1200.0), 880.0, 880.0 * 0.03);
  EXPECT_NEAR(peak(down, 150.0, 1200.0), 220.0, 220.0 * 0.03);
  EXPECT_EQ(up.label, c.label);
  for (float v : up.samples) ASSERT_LE(std::abs(v), 1.0f);
}

TEST(PitchShift, RangeChecked) {
  const auto c = sine_clip(440.0, 0.2);
  EXPECT_THROW(pitch_shift(c, 12.5), ValidationError);
  EXPECT_THROW(pitch_shift(c, -13.0), ValidationError);
}

TEST(TimeStretch, IdentityRate) {
  const auto c = sine_clip(440.0, 1.0);
  EXPECT_EQ(time_stretch(c, 1.0).samples.size(), c.samples.size());
}

TEST(TimeStretch, DoubleSpeedHalvesLengthKeepsPitch) {
  const auto c = sine_clip(440.0, 2.0);
  const auto out = time_stretch(c, 2.0);
  EXPECT_NEAR(static_cast<double>(out.samples.size()), c.samples.size() / 2.0, 0.02 * c.samples.size() / 2.0);
  EXPECT_NEAR(peak(out, 300.0, 600.0), 440.0, 440.0 * 0.03);
}

TEST(TimeStretch, HalfSpeedDoublesLength) {
  const auto c = sine_clip(440.0, 1.0);
  const auto out = time_stretch(c, 0.5);
  EXPECT_NEAR(static_cast<double>(out.samples.size()), 2.0 * c.samples.size(), 0.02 * 2.0 * c.samples.size());
  EXPECT_NEAR(peak(out, 300.0, 600.0), 440.0, 440.0 * 0.03);
  for (float v : out.samples) ASSERT_LE(std::abs(v), 1.0f);
}

TEST(TimeStretch, RangeChecked) {
  const auto c = sine_clip(440.0, 0.2);
  EXPECT_THROW(time_stretch(c, 0.49), ValidationError);
  EXPECT_THROW(time_stretch(c, 2.01), ValidationError);
}

TEST(SpecAugment, ZeroMasksIsIdentity) {
  const auto s = random_spec(1);
  SpecAugmentParams p{0, 8, 0, 8, false};
  const auto out = spec_augment(s, p, 1);
  EXPECT_EQ(out.values, s.values);
  EXPECT_EQ(out.label, s.label);
}

TEST(SpecAugment, SingleExactFrequencyMaskZeroesEightRows) {
  const auto s = random_spec(2);
  SpecAugmentParams p{1, 8, 0, 8, true};
  std::vector<MaskBand> bands;
  const auto out = spec_augment(s, p, 3, std::nullopt, &bands);
  ASSERT_EQ(bands.size(), 1u);
  int zero_rows = 0, untouched_rows = 0;
  for (int m = 0; m < 64; ++m) {
    bool all_zero = true, same = true;
    for (int t = 0; t < 64; ++t) {
      all_zero = all_zero && out.at(m, t) == 0.0f;
      same = same && out.at(m, t) == s.at(m, t);
    }
    zero_rows += all_zero;
    untouched_rows += same;
  }
  EXPECT_EQ(zero_rows, 8);
  EXPECT_EQ(untouched_rows, 56);
  EXPECT_EQ(out.n_mels, 64);
  EXPECT_EQ(out.n_frames, 64);
}

TEST(SpecAugment, MaskedCellsMatchDrawnBands) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const auto s = random_spec(100 + seed);
    SpecAugmentParams p{1, 4, 1, 4, true};
    std::vector<MaskBand> bands;
    const auto out = spec_augment(s, p, seed, std::nullopt, &bands);
    ASSERT_EQ(bands.size(), 2u);
    std::set<std::pair<int, int>> expected;
    for (const auto& b : bands) {
      for (int i = b.start; i < b.start + b.width; ++i) {
        for (int o = 0; o < 64; ++o) {
          expected.insert(b.axis == MaskBand::Axis::kFrequency ? std::pair{i, o} : std::pair{o, i});
        }
      }
    }
    int masked = 0;
    for (int m = 0; m < 64; ++m) {
      for (int t = 0; t < 64; ++t) {
        const bool in_band = expected.contains({m, t});
        if (in_band) {
          ASSERT_EQ(out.at(m, t), 0.0f);
          ++masked;
        } else {
          ASSERT_EQ(out.at(m, t), s.at(m, t));
        }
      }
    }
    EXPECT_GE(masked, 4 * 64);
    EXPECT_LE(masked, 4 * 64 + 4 * 64);
    EXPECT_EQ(masked, 4 * 64 + 4 * 64 - 16);
  }
}

TEST(SpecAugment, UnnormalizedFillIsMean) {
  const auto s = random_spec(5, false, -7.0f);
  const double mean = std::accumulate(s.values.begin(), s.values.end(), 0.0) / s.values.size();
  SpecAugmentParams p{1, 6, 0, 8, true};
  std::vector<MaskBand> bands;
  const auto out = spec_augment(s, p, 9, std::nullopt, &bands);
  EXPECT_NEAR(out.at(bands[0].start, 0), mean, 1e-5);
}

TEST(SpecAugment, WidthsBoundedByMax) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::vector<MaskBand> bands;
    spec_augment(random_spec(seed), SpecAugmentParams{2, 8, 2, 8, false}, seed, std::nullopt, &bands);
    ASSERT_EQ(bands.size(), 4u);
    for (const auto& b : bands) {
      ASSERT_GE(b.width, 0);
      ASSERT_LE(b.width, 8);
      ASSERT_GE(b.start, 0);
      ASSERT_LE(b.start + b.width, 64);
    }
  }
}

TEST(SpecAugment, OversizedWidthRejected) {
  const auto s = random_spec(6);
  EXPECT_THROW(spec_augment(s, SpecAugmentParams{1, 64, 0, 8, false}, 1), ValidationError);
  EXPECT_THROW(spec_augment(s, SpecAugmentParams{0, 8, 1, 70, false}, 1), ValidationError);
}

TEST(SpecAugment, SeededDeterminism) {
  const auto s = random_spec(7);
  const SpecAugmentParams p;
  EXPECT_EQ(spec_augment(s, p, 11).values, spec_augment(s, p, 11).values);
  bool any_diff = false;
  for (std::uint64_t seed = 12; seed < 20 && !any_diff; ++seed) {
    any_diff = spec_augment(s, p, 11).values != spec_augment(s, p, seed).values;
  }
  EXPECT_TRUE(any_diff);
}

TEST(Policy, JsonRoundTripAndStrictKeys) {
  AugmentationPolicy p;
  p.kind = AugmentationKind::kPitchShift;
  p.semitones_min = -1.0;
  p.rng_seed = 42;
  const nlohmann::json j = p;
  const auto q = j.get<AugmentationPolicy>();
  EXPECT_EQ(q.kind, p.kind);
  EXPECT_EQ(q.semitones_min, -1.0);
  EXPECT_EQ(q.rng_seed, 42u);
  auto bad = j;
  bad["semitone"] = 1;
  EXPECT_THROW(bad.get<AugmentationPolicy>(), ValidationError);
  auto out_of_range = j;
  out_of_range["stretch"] = {0.1, 1.0};
  EXPECT_THROW(out_of_range.get<AugmentationPolicy>(), ValidationError);
  EXPECT_THROW(augmentation_kind_from_string("mixup"), ValidationError);
}

TEST(Policy, WaveformDrawsArePerSampleAndBounded) {
  const auto c = sine_clip(440.0, 0.5, 0.9);
  for (auto kind : {AugmentationKind::kWhiteNoise, AugmentationKind::kPitchShift, AugmentationKind::kTimeStretch}) {
    AugmentationPolicy p;
    p.kind = kind;
    p.rng_seed = 5;
    const auto a = apply_waveform_policy(c, p, 0);
    EXPECT_EQ(a.samples, apply_waveform_policy(c, p, 0).samples) << to_string(kind);
    EXPECT_NE(a.samples, apply_waveform_policy(c, p, 1).samples) << to_string(kind);
    EXPECT_EQ(a.label, c.label);
    for (float v : a.samples) ASSERT_LE(std::abs(v), 1.0f);
  }
  AugmentationPolicy spec;
  EXPECT_THROW(apply_waveform_policy(c, spec, 0), ValidationError);
  AugmentationPolicy noise;
  noise.kind = AugmentationKind::kWhiteNoise;
  EXPECT_THROW(apply_spectrogram_policy(random_spec(1), noise, 0), ValidationError);
}
