#include "cgaug/classical_augment.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "cgaug/errors.hpp"
#include "cgaug/seeding.hpp"
#include "fft.hpp"

namespace cgaug {

namespace {

constexpr std::size_t kVocoderFft = 2048;
constexpr std::size_t kVocoderHop = 512;

double wrap_phase(double x) {
  return x - 2.0 * std::numbers::pi * std::round(x / (2.0 * std::numbers::pi));
}

// Centered STFT, phase-advance interpolation over fractional frame steps,
// then weighted overlap-add resynthesis.
std::vector<float> phase_vocoder(const std::vector<float>& x, double rate) {
  const std::size_t n_fft = kVocoderFft;
  const std::size_t hop = kVocoderHop;
  const std::size_t pad = n_fft / 2;
  const std::size_t out_len = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) / rate));

  std::vector<double> padded(x.size() + 2 * pad, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(pad));

  detail::RealFft fft(n_fft);
  const auto window = detail::hann_window(n_fft);
  const std::size_t bins = fft.bins();
  const std::size_t n_frames = padded.size() >= n_fft ? 1 + (padded.size() - n_fft) / hop : 0;
  if (n_frames == 0) return std::vector<float>(out_len, 0.0f);

  std::vector<std::vector<std::complex<double>>> stft(n_frames + 1,
                                                      std::vector<std::complex<double>>(bins));
  std::vector<double> frame(n_fft);
  for (std::size_t t = 0; t < n_frames; ++t) {
    for (std::size_t i = 0; i < n_fft; ++i) frame[i] = padded[t * hop + i] * window[i];
    fft.forward(frame, stft[t]);
  }
  // stft[n_frames] stays zero so interpolation at the end is defined.

  std::vector<double> advance(bins);
  for (std::size_t k = 0; k < bins; ++k) {
    advance[k] = 2.0 * std::numbers::pi * static_cast<double>(k) * hop / static_cast<double>(n_fft);
  }

  std::vector<double> phase(bins);
  for (std::size_t k = 0; k < bins; ++k) phase[k] = std::arg(stft[0][k]);

  const std::size_t n_out_frames = static_cast<std::size_t>(std::ceil(static_cast<double>(n_frames) / rate));
  const std::size_t synth_len = (n_out_frames - 1) * hop + n_fft;
  std::vector<double> out(synth_len, 0.0);
  std::vector<double> norm(synth_len, 0.0);
  std::vector<std::complex<double>> spec(bins);
  std::vector<double> time(n_fft);

  for (std::size_t j = 0; j < n_out_frames; ++j) {
    const double step = static_cast<double>(j) * rate;
    const auto t0 = std::min(static_cast<std::size_t>(step), n_frames - 1);
    const double alpha = step - static_cast<double>(t0);
    const auto& a = stft[t0];
    const auto& b = stft[t0 + 1];
    for (std::size_t k = 0; k < bins; ++k) {
      const double mag = (1.0 - alpha) * std::abs(a[k]) + alpha * std::abs(b[k]);
      spec[k] = std::polar(mag, phase[k]);
      const double dphi = std::arg(b[k]) - std::arg(a[k]) - advance[k];
      phase[k] += advance[k] + wrap_phase(dphi);
    }
    fft.inverse(spec, time);
    const std::size_t start = j * hop;
    for (std::size_t i = 0; i < n_fft; ++i) {
      out[start + i] += time[i] / static_cast<double>(n_fft) * window[i];
      norm[start + i] += window[i] * window[i];
    }
  }

  std::vector<float> y(out_len, 0.0f);
  for (std::size_t i = 0; i < out_len; ++i) {
    const std::size_t src = i + pad;
    if (src >= synth_len) break;
    const double v = norm[src] > 1e-8 ? out[src] / norm[src] : 0.0;
    y[i] = static_cast<float>(std::clamp(v, -1.0, 1.0));
  }
  return y;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  if (lo == hi) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

}  // namespace

AudioClip add_white_noise(const AudioClip& clip, double snr_db, std::uint64_t seed) {
  validate_clip(clip);
  if (std::isinf(snr_db) && snr_db > 0) return clip;
  if (std::isnan(snr_db)) throw ValidationError("add_white_noise: snr_db is NaN");

  double signal_power = 0.0;
  for (float s : clip.samples) signal_power += static_cast<double>(s) * s;
  signal_power /= static_cast<double>(clip.samples.size());
  if (!(signal_power > 0.0)) {
    throw ValidationError("add_white_noise: clip '" + clip.source_id + "' is silent, SNR undefined");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> noise(clip.samples.size());
  double noise_power = 0.0;
  for (double& n : noise) {
    n = normal(rng);
    noise_power += n * n;
  }
  noise_power /= static_cast<double>(noise.size());
  const double target = signal_power / std::pow(10.0, snr_db / 10.0);
  const double scale = noise_power > 0.0 ? std::sqrt(target / noise_power) : 0.0;

  AudioClip out = clip;
  for (std::size_t i = 0; i < noise.size(); ++i) {
    out.samples[i] = static_cast<float>(std::clamp(clip.samples[i] + scale * noise[i], -1.0, 1.0));
  }
  return out;
}

AudioClip time_stretch(const AudioClip& clip, double rate) {
  if (!(rate >= 0.5 && rate <= 2.0)) {
    throw ValidationError("time_stretch: rate must lie in [0.5, 2], got " + std::to_string(rate));
  }
  validate_clip(clip);
  AudioClip out = clip;
  if (rate == 1.0) return out;
  out.samples = phase_vocoder(clip.samples, rate);
  return out;
}

AudioClip pitch_shift(const AudioClip& clip, double semitones) {
  if (!(std::abs(semitones) <= 12.0)) {
    throw ValidationError("pitch_shift: |semitones| must be <= 12, got " + std::to_string(semitones));
  }
  validate_clip(clip);
  AudioClip out = clip;
  if (semitones == 0.0) return out;
  const double factor = std::pow(2.0, semitones / 12.0);
  // Stretch to factor * n samples, then squeeze back: every frequency scales
  // by factor while the duration is preserved.
  const auto stretched = phase_vocoder(clip.samples, 1.0 / factor);
  out.samples = resample_to_length(stretched, clip.samples.size());
  for (float& s : out.samples) s = std::clamp(s, -1.0f, 1.0f);
  return out;
}

MelSpectrogram spec_augment(const MelSpectrogram& spec, const SpecAugmentParams& params,
                            std::uint64_t seed, std::optional<float> fill,
                            std::vector<MaskBand>* drawn) {
  if (params.max_freq_width >= spec.n_mels || params.max_time_width >= spec.n_frames) {
    throw ValidationError("spec_augment: mask widths must be smaller than the spectrogram axes");
  }
  if (params.n_freq_masks < 0 || params.n_time_masks < 0 || params.max_freq_width < 0 ||
      params.max_time_width < 0) {
    throw ValidationError("spec_augment: mask counts and widths must be non-negative");
  }
  float value = 0.0f;
  if (fill) {
    value = *fill;
  } else if (!spec.normalized && !spec.values.empty()) {
    double acc = 0.0;
    for (float v : spec.values) acc += v;
    value = static_cast<float>(acc / static_cast<double>(spec.values.size()));
  }

  std::mt19937_64 rng(seed);
  auto draw = [&](int max_width, int axis_len) {
    const int width = params.exact_widths ? max_width
                                          : std::uniform_int_distribution<int>(0, max_width)(rng);
    const int start = std::uniform_int_distribution<int>(0, axis_len - width)(rng);
    return std::pair{start, width};
  };

  MelSpectrogram out = spec;
  std::vector<MaskBand> bands;
  for (int i = 0; i < params.n_freq_masks; ++i) {
    const auto [start, width] = draw(params.max_freq_width, spec.n_mels);
    bands.push_back({MaskBand::Axis::kFrequency, start, width});
    for (int m = start; m < start + width; ++m) {
      for (int t = 0; t < spec.n_frames; ++t) out.at(m, t) = value;
    }
  }
  for (int i = 0; i < params.n_time_masks; ++i) {
    const auto [start, width] = draw(params.max_time_width, spec.n_frames);
    bands.push_back({MaskBand::Axis::kTime, start, width});
    for (int m = 0; m < spec.n_mels; ++m) {
      for (int t = start; t < start + width; ++t) out.at(m, t) = value;
    }
  }
  if (drawn) *drawn = std::move(bands);
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(AugmentationKind kind) {
  switch (kind) {
    case AugmentationKind::kWhiteNoise: return "white_noise";
    case AugmentationKind::kPitchShift: return "pitch_shift";
    case AugmentationKind::kTimeStretch: return "time_stretch";
    case AugmentationKind::kSpecAugment: return "spec_augment";
  }
  return "unknown";
}

AugmentationKind augmentation_kind_from_string(const std::string& name) {
  if (name == "white_noise") return AugmentationKind::kWhiteNoise;
  if (name == "pitch_shift") return AugmentationKind::kPitchShift;
  if (name == "time_stretch") return AugmentationKind::kTimeStretch;
  if (name == "spec_augment") return AugmentationKind::kSpecAugment;
  throw ValidationError("unknown augmentation kind: " + name);
}

void AugmentationPolicy::validate() const {
  if (snr_db_min > snr_db_max || semitones_min > semitones_max || stretch_min > stretch_max) {
    throw ValidationError("augmentation policy: range minimum exceeds maximum");
  }
  if (semitones_min < -12.0 || semitones_max > 12.0) {
    throw ValidationError("augmentation policy: semitone range must lie in [-12, 12]");
  }
  if (stretch_min < 0.5 || stretch_max > 2.0) {
    throw ValidationError("augmentation policy: stretch range must lie in [0.5, 2]");
  }
  if (spec_augment.n_freq_masks < 0 || spec_augment.n_time_masks < 0 ||
      spec_augment.max_freq_width < 0 || spec_augment.max_time_width < 0) {
    throw ValidationError("augmentation policy: SpecAugment counts must be non-negative");
  }
}

void to_json(nlohmann::json& j, const AugmentationPolicy& p) {
  j = nlohmann::json{{"kind", to_string(p.kind)},
                     {"snr_db", {p.snr_db_min, p.snr_db_max}},
                     {"semitones", {p.semitones_min, p.semitones_max}},
                     {"stretch", {p.stretch_min, p.stretch_max}},
                     {"freq_masks", p.spec_augment.n_freq_masks},
                     {"max_freq_width", p.spec_augment.max_freq_width},
                     {"time_masks", p.spec_augment.n_time_masks},
                     {"max_time_width", p.spec_augment.max_time_width},
                     {"seed", p.rng_seed}};
}

void from_json(const nlohmann::json& j, AugmentationPolicy& p) {
  static const std::set<std::string> known = {"kind", "snr_db", "semitones", "stretch",
                                              "freq_masks", "max_freq_width", "time_masks",
                                              "max_time_width", "seed"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ValidationError("augmentation policy: unknown key '" + k + "'");
  }
  p.kind = augmentation_kind_from_string(j.at("kind").get<std::string>());
  auto range = [&](const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto r = j.at(key).get<std::vector<double>>();
    if (r.size() != 2) throw ValidationError(std::string("augmentation policy: '") + key + "' needs [min, max]");
    lo = r[0];
    hi = r[1];
  };
  range("snr_db", p.snr_db_min, p.snr_db_max);
  range("semitones", p.semitones_min, p.semitones_max);
  range("stretch", p.stretch_min, p.stretch_max);
  p.spec_augment.n_freq_masks = j.value("freq_masks", p.spec_augment.n_freq_masks);
  p.spec_augment.max_freq_width = j.value("max_freq_width", p.spec_augment.max_freq_width);
  p.spec_augment.n_time_masks = j.value("time_masks", p.spec_augment.n_time_masks);
  p.spec_augment.max_time_width = j.value("max_time_width", p.spec_augment.max_time_width);
  p.rng_seed = j.value("seed", p.rng_seed);
  p.validate();
}

AudioClip apply_waveform_policy(const AudioClip& clip, const AugmentationPolicy& policy,
                                std::uint64_t sample_index) {
  policy.validate();
  const std::uint64_t seed = derive_seed(policy.rng_seed, sample_index);
  std::mt19937_64 rng(seed);
  switch (policy.kind) {
    case AugmentationKind::kWhiteNoise:
      return add_white_noise(clip, uniform(rng, policy.snr_db_min, policy.snr_db_max), mix_seed(seed));
    case AugmentationKind::kPitchShift:
      return pitch_shift(clip, uniform(rng, policy.semitones_min, policy.semitones_max));
    case AugmentationKind::kTimeStretch:
      return time_stretch(clip, uniform(rng, policy.stretch_min, policy.stretch_max));
    case AugmentationKind::kSpecAugment:
      break;
  }
  throw ValidationError("apply_waveform_policy: spec_augment is a spectrogram policy");
}

MelSpectrogram apply_spectrogram_policy(const MelSpectrogram& spec, const AugmentationPolicy& policy,
                                        std::uint64_t sample_index) {
  if (policy.kind != AugmentationKind::kSpecAugment) {
    throw ValidationError("apply_spectrogram_policy: " + to_string(policy.kind) + " is a waveform policy");
  }
  return spec_augment(spec, policy.spec_augment, derive_seed(policy.rng_seed, sample_index));
}

}  // namespace cgaug
