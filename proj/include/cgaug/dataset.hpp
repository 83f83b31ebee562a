#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cgaug/audio.hpp"

namespace cgaug {

// ---------------------------------------------------------------------------
// Manifest

struct ManifestEntry {
  std::filesystem::path path;
  int label = 0;
};

struct DatasetManifest {
  std::vector<std::string> classes;
  std::vector<ManifestEntry> entries;  // sorted lexicographically by path
  std::map<std::string, int> per_class_counts;

  int class_index(const std::string& name) const;
};

// Accepts either a JSON manifest file
//   {"classes": [...], "entries": [{"path": ..., "label": ...}]}
// with paths relative to the manifest's directory, or a dataset root whose
// immediate subdirectories are class names holding .wav files.
DatasetManifest load_manifest(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Spectrograms

struct SpectrogramConfig {
  int n_fft = 1024;
  int hop_length = 256;
  int n_mels = 64;
  int frames_per_window = 64;
  int sample_rate = 44100;
  double fmin = 20.0;
  double fmax = 22050.0;
  double log_floor = 1e-10;
  bool allow_resample = true;

  void validate() const;
};

void to_json(nlohmann::json& j, const SpectrogramConfig& cfg);
void from_json(const nlohmann::json& j, SpectrogramConfig& cfg);

// Row-major n_mels x n_frames log-mel matrix.
struct MelSpectrogram {
  std::vector<float> values;
  int n_mels = 0;
  int n_frames = 0;
  int label = 0;
  bool normalized = false;

  // Provenance: originating clip and window, and whether the item was
  // produced by an augmentation rather than read from audio.
  std::string source_id;
  int window_index = -1;
  bool synthetic = false;

  float& at(int mel, int frame) { return values[static_cast<std::size_t>(mel) * n_frames + frame]; }
  float at(int mel, int frame) const { return values[static_cast<std::size_t>(mel) * n_frames + frame]; }
  std::size_t size() const { return values.size(); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// n_mels center frequencies of the triangular filters.
std::vector<double> mel_center_frequencies(const SpectrogramConfig& cfg);

// Row-major n_mels x (n_fft/2 + 1) triangular filter matrix. Throws
// ValidationError if any filter covers no FFT bin.
std::vector<double> mel_filterbank(const SpectrogramConfig& cfg);

// Number of STFT frames (no centering, frames start at multiples of hop).
std::size_t stft_frame_count(std::size_t n_samples, const SpectrogramConfig& cfg);

// Power spectrogram, row-major n_frames x (n_fft/2 + 1), Hann-windowed.
std::vector<double> power_spectrogram(std::span<const float> samples,
                                      const SpectrogramConfig& cfg);

// Splits the clip's STFT into non-overlapping windows of frames_per_window
// frames; a trailing partial window is discarded. Each window becomes a
// log(mel_power + log_floor) matrix carrying the clip's label.
std::vector<MelSpectrogram> compute_mel_spectrograms(const AudioClip& clip,
                                                     const SpectrogramConfig& cfg);

// Sample range [begin, end) of the audio that feeds a given window.
std::pair<std::size_t, std::size_t> window_sample_range(int window_index,
                                                        const SpectrogramConfig& cfg);

// ---------------------------------------------------------------------------
// Normalization

struct NormalizationStats {
  double mean = 0.0;
  double std = 1.0;
  std::size_t n_samples = 0;
};

void to_json(nlohmann::json& j, const NormalizationStats& s);
void from_json(const nlohmann::json& j, NormalizationStats& s);

// Population mean/std over every cell of every spectrogram.
NormalizationStats fit_normalization(std::span<const MelSpectrogram> specs);

MelSpectrogram normalize(const MelSpectrogram& spec, const NormalizationStats& stats);
MelSpectrogram denormalize(const MelSpectrogram& spec, const NormalizationStats& stats);

// ---------------------------------------------------------------------------
// Corpus persistence

struct SpectrogramCorpus {
  std::vector<std::string> classes;
  std::vector<MelSpectrogram> items;
  std::optional<NormalizationStats> stats;
  SpectrogramConfig config;
  std::string config_hash;  // provenance of the producing experiment config

  std::vector<int> per_class_counts() const;
  std::vector<int> labels() const;
};

// One UTF-8 JSON header line, then little-endian float32 (N, n_mels, frames).
void save_corpus(const SpectrogramCorpus& corpus, const std::filesystem::path& path);
SpectrogramCorpus load_corpus(const std::filesystem::path& path);

struct PreprocessResult {
  SpectrogramCorpus corpus;
  std::vector<std::string> short_clips;  // clips yielding zero windows
};

// Manifest -> normalized corpus with stats fit over the whole corpus.
// Clips are processed in manifest order.
PreprocessResult build_corpus(const DatasetManifest& manifest,
                              const SpectrogramConfig& cfg);

}  // namespace cgaug
