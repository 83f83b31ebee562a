#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>

#include "cgaug/audio.hpp"
#include "cgaug/classical_augment.hpp"
#include "cgaug/cross_validation.hpp"
#include "cgaug/gan_models.hpp"

namespace cgaug {

// SpecAugment applied once to every training item.
class SpecAugmentAugmenter final : public Augmenter {
 public:
  explicit SpecAugmentAugmenter(AugmentationPolicy policy);
  std::string name() const override { return "spec_augment"; }
  std::vector<MelSpectrogram> augment(std::span<const MelSpectrogram> train, int n_classes, int fold) override;

 private:
  AugmentationPolicy policy_;
};

// Looks up the audio behind a spectrogram's source_id.
using ClipSource = std::function<AudioClip(const std::string& source_id, int label)>;

// Reads source ids as WAV paths.
ClipSource wav_clip_source();

// Waveform augmentation: the whole source clip is transformed, converted back
// to log-mel windows with the corpus settings and normalized with the corpus
// stats. The window at the same relative position replaces the original.
class WaveformAugmenter final : public Augmenter {
 public:
  WaveformAugmenter(AugmentationPolicy policy, SpectrogramConfig config, NormalizationStats stats,
                    ClipSource source);
  std::string name() const override { return to_string(policy_.kind); }
  std::vector<MelSpectrogram> augment(std::span<const MelSpectrogram> train, int n_classes, int fold) override;

 private:
  const AudioClip& clip(const std::string& source_id, int label);

  AugmentationPolicy policy_;
  SpectrogramConfig config_;
  NormalizationStats stats_;
  ClipSource source_;
  std::map<std::string, AudioClip> cache_;
};

// Class-conditional generator samples matching the training counts.
class GanAugmenter final : public Augmenter {
 public:
  GanAugmenter(Generator generator, std::uint64_t seed, std::string name = "gan_checkpoint");
  static std::unique_ptr<GanAugmenter> from_checkpoint(const std::filesystem::path& dir, std::uint64_t seed,
                                                       std::string name = "gan_checkpoint");
  std::string name() const override { return name_; }
  std::vector<MelSpectrogram> augment(std::span<const MelSpectrogram> train, int n_classes, int fold) override;

 private:
  Generator generator_;
  std::uint64_t seed_;
  std::string name_;
};

}  // namespace cgaug
