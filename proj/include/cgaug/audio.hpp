#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace cgaug {

// A labeled mono waveform. Samples are expected in [-1, 1].
struct AudioClip {
  std::vector<float> samples;
  int sample_rate = 0;
  int label = 0;
  std::string source_id;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate
                           : 0.0;
  }
};

// Throws ValidationError on empty samples, non-finite values or a
// non-positive sample rate.
void validate_clip(const AudioClip& clip);

struct WavData {
  int sample_rate = 0;
  int channels = 0;
  // Interleaved frames, converted to float in [-1, 1].
  std::vector<float> interleaved;
};

// Reads RIFF/WAVE with PCM 16/24/32-bit or IEEE float32 (also
// WAVE_FORMAT_EXTENSIBLE wrapping those).
WavData read_wav(const std::filesystem::path& path);

// Writes 16-bit PCM mono.
void write_wav(const std::filesystem::path& path, std::span<const float> mono,
               int sample_rate);

// Channel average of interleaved frames.
std::vector<float> downmix(const WavData& wav);

// Loads a WAV file as a mono clip (stereo is averaged).
AudioClip load_clip(const std::filesystem::path& path, int label);

// Band-limited resampling by windowed-sinc interpolation. The output has
// round(n * target / source) samples.
std::vector<float> resample(std::span<const float> input, double source_rate,
                            double target_rate);

// Resample to an explicit output length: output[i] samples the input at
// position i * input.size() / out_len with an anti-aliasing cutoff.
std::vector<float> resample_to_length(std::span<const float> input,
                                      std::size_t out_len);

}  // namespace cgaug
