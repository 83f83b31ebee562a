#include "cgaug/augmenters.hpp"

#include <algorithm>
#include <cmath>

#include "cgaug/errors.hpp"
#include "cgaug/gan_training.hpp"
#include "cgaug/seeding.hpp"

namespace cgaug {

namespace {

std::uint64_t item_index(int fold, std::size_t i) {
  return (static_cast<std::uint64_t>(fold) << 32) | static_cast<std::uint64_t>(i);
}

}  // namespace

SpecAugmentAugmenter::SpecAugmentAugmenter(AugmentationPolicy policy) : policy_(std::move(policy)) {
  if (policy_.kind != AugmentationKind::kSpecAugment) {
    throw ValidationError("SpecAugmentAugmenter needs a spec_augment policy");
  }
  policy_.validate();
}

std::vector<MelSpectrogram> SpecAugmentAugmenter::augment(std::span<const MelSpectrogram> train, int, int fold) {
  std::vector<MelSpectrogram> out;
  out.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    auto s = apply_spectrogram_policy(train[i], policy_, item_index(fold, i));
    s.synthetic = true;
    s.source_id = train[i].source_id + "#spec_augment";
    out.push_back(std::move(s));
  }
  return out;
}

ClipSource wav_clip_source() {
  return [](const std::string& source_id, int label) { return load_clip(source_id, label); };
}

WaveformAugmenter::WaveformAugmenter(AugmentationPolicy policy, SpectrogramConfig config, NormalizationStats stats,
                                     ClipSource source)
    : policy_(std::move(policy)), config_(config), stats_(stats), source_(std::move(source)) {
  if (!policy_.is_waveform()) throw ValidationError("WaveformAugmenter needs a waveform policy");
  policy_.validate();
  config_.validate();
}

const AudioClip& WaveformAugmenter::clip(const std::string& source_id, int label) {
  auto it = cache_.find(source_id);
  if (it == cache_.end()) {
    if (source_id.empty()) throw ValidationError("waveform augmentation needs spectrogram provenance (source_id)");
    it = cache_.emplace(source_id, source_(source_id, label)).first;
  }
  return it->second;
}

std::vector<MelSpectrogram> WaveformAugmenter::augment(std::span<const MelSpectrogram> train, int, int fold) {
  const auto window_len = window_sample_range(0, config_).second;
  std::vector<MelSpectrogram> out;
  out.reserve(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto& item = train[i];
    const AudioClip& source = clip(item.source_id, item.label);
    AudioClip augmented = apply_waveform_policy(source, policy_, item_index(fold, i));
    if (augmented.sample_rate != config_.sample_rate) {
      augmented.samples = resample(augmented.samples, augmented.sample_rate, config_.sample_rate);
      augmented.sample_rate = config_.sample_rate;
    }
    if (augmented.samples.size() < window_len) augmented.samples.resize(window_len, 0.0f);
    auto windows = compute_mel_spectrograms(augmented, config_);

    // Same relative position in the (possibly stretched) clip.
    const auto n_orig = std::max<std::size_t>(1, stft_frame_count(source.samples.size(), config_) /
                                                     static_cast<std::size_t>(config_.frames_per_window));
    const auto w = std::min(windows.size() - 1, static_cast<std::size_t>(std::max(0, item.window_index)) *
                                                    windows.size() / n_orig);
    MelSpectrogram s = normalize(windows[w], stats_);
    s.label = item.label;
    s.synthetic = true;
    s.window_index = item.window_index;
    s.source_id = item.source_id + "#" + name();
    out.push_back(std::move(s));
  }
  return out;
}

GanAugmenter::GanAugmenter(Generator generator, std::uint64_t seed, std::string name)
    : generator_(std::move(generator)), seed_(seed), name_(std::move(name)) {}

std::unique_ptr<GanAugmenter> GanAugmenter::from_checkpoint(const std::filesystem::path& dir, std::uint64_t seed,
                                                            std::string name) {
  return std::make_unique<GanAugmenter>(load_generator(dir), seed, std::move(name));
}

std::vector<MelSpectrogram> GanAugmenter::augment(std::span<const MelSpectrogram> train, int n_classes, int fold) {
  if (n_classes != generator_->spec().n_classes) {
    throw ValidationError("GAN checkpoint has " + std::to_string(generator_->spec().n_classes) +
                          " classes, corpus has " + std::to_string(n_classes));
  }
  std::vector<int> counts(static_cast<std::size_t>(n_classes), 0);
  for (const auto& s : train) ++counts[static_cast<std::size_t>(s.label)];
  return generate_samples(generator_, counts, derive_seed(seed_, static_cast<std::uint64_t>(fold)), name_);
}

}  // namespace cgaug
