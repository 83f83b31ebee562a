#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cgaug/audio.hpp"
#include "cgaug/dataset.hpp"

namespace cgaug {

// Pass this as snr_db to leave the clip untouched.
inline constexpr double kNoNoise = std::numeric_limits<double>::infinity();

// Gaussian noise scaled so that 10*log10(P_signal / P_noise) == snr_db, then
// clipped to [-1, 1]. Throws ValidationError on a silent clip.
AudioClip add_white_noise(const AudioClip& clip, double snr_db, std::uint64_t seed);

// Phase-vocoder time stretch; output length is round(n / rate). Valid rates
// are [0.5, 2].
AudioClip time_stretch(const AudioClip& clip, double rate);

// Time stretch by 2^(semitones/12) followed by resampling back to the input
// length. Valid range is [-12, 12] semitones.
AudioClip pitch_shift(const AudioClip& clip, double semitones);

struct MaskBand {
  enum class Axis { kFrequency, kTime } axis;
  int start = 0;
  int width = 0;
};

struct SpecAugmentParams {
  int n_freq_masks = 2;
  int max_freq_width = 8;
  int n_time_masks = 2;
  int max_time_width = 8;
  // Use the maximum widths instead of drawing them from [0, max].
  bool exact_widths = false;
};

// Frequency and time masking. Masked cells take `fill` (default: 0 for
// normalized input, the spectrogram mean otherwise). When `drawn` is given,
// it receives the bands that were applied.
MelSpectrogram spec_augment(const MelSpectrogram& spec, const SpecAugmentParams& params,
                            std::uint64_t seed, std::optional<float> fill = std::nullopt,
                            std::vector<MaskBand>* drawn = nullptr);

// ---------------------------------------------------------------------------
// Policies with per-sample parameter draws.

enum class AugmentationKind { kWhiteNoise, kPitchShift, kTimeStretch, kSpecAugment };

std::string to_string(AugmentationKind kind);
AugmentationKind augmentation_kind_from_string(const std::string& name);

struct AugmentationPolicy {
  AugmentationKind kind = AugmentationKind::kSpecAugment;
  double snr_db_min = 10.0;
  double snr_db_max = 30.0;
  double semitones_min = -2.0;
  double semitones_max = 2.0;
  double stretch_min = 0.8;
  double stretch_max = 1.25;
  SpecAugmentParams spec_augment;
  std::uint64_t rng_seed = 0;

  bool is_waveform() const { return kind != AugmentationKind::kSpecAugment; }
  void validate() const;
};

void to_json(nlohmann::json& j, const AugmentationPolicy& p);
void from_json(const nlohmann::json& j, AugmentationPolicy& p);

// Applies a waveform policy, drawing parameters from the policy ranges with
// a seed derived from (rng_seed, sample_index).
AudioClip apply_waveform_policy(const AudioClip& clip, const AugmentationPolicy& policy,
                                std::uint64_t sample_index);

// Applies the spectrogram policy (SpecAugment) with a derived seed.
MelSpectrogram apply_spectrogram_policy(const MelSpectrogram& spec,
                                        const AugmentationPolicy& policy,
                                        std::uint64_t sample_index);

}  // namespace cgaug
