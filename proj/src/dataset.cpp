#include "cgaug/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstring>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "cgaug/errors.hpp"
#include "fft.hpp"

namespace cgaug {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Manifest

int DatasetManifest::class_index(const std::string& name) const {
  const auto it = std::find(classes.begin(), classes.end(), name);
  if (it == classes.end()) throw ValidationError("unknown class label: " + name);
  return static_cast<int>(it - classes.begin());
}

namespace {

bool is_wav(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".wav";
}

void finalize_manifest(DatasetManifest& m) {
  std::set<std::string> unique(m.classes.begin(), m.classes.end());
  if (unique.size() != m.classes.size()) throw ValidationError("manifest classes are not unique");
  if (m.entries.empty()) throw ValidationError("manifest has no entries");
  std::sort(m.entries.begin(), m.entries.end(),
            [](const ManifestEntry& a, const ManifestEntry& b) { return a.path < b.path; });
  m.per_class_counts.clear();
  for (const auto& c : m.classes) m.per_class_counts[c] = 0;
  for (const auto& e : m.entries) {
    if (!fs::exists(e.path)) throw IoError("audio file not found: " + e.path.string());
    ++m.per_class_counts[m.classes[static_cast<std::size_t>(e.label)]];
  }
}

DatasetManifest manifest_from_directory(const fs::path& root) {
  DatasetManifest m;
  std::vector<fs::path> class_dirs;
  for (const auto& d : fs::directory_iterator(root)) {
    if (d.is_directory()) class_dirs.push_back(d.path());
  }
  std::sort(class_dirs.begin(), class_dirs.end());
  for (const auto& dir : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& f : fs::recursive_directory_iterator(dir)) {
      if (f.is_regular_file() && is_wav(f.path())) files.push_back(f.path());
    }
    if (files.empty()) continue;
    const int label = static_cast<int>(m.classes.size());
    m.classes.push_back(dir.filename().string());
    for (auto& f : files) m.entries.push_back({std::move(f), label});
  }
  finalize_manifest(m);
  return m;
}

DatasetManifest manifest_from_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open manifest: " + file.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError("manifest " + file.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("classes") || !j.contains("entries")) {
    throw ValidationError("manifest " + file.string() + " needs 'classes' and 'entries'");
  }
  DatasetManifest m;
  m.classes = j.at("classes").get<std::vector<std::string>>();
  const fs::path base = file.parent_path();
  for (const auto& e : j.at("entries")) {
    const fs::path rel = e.at("path").get<std::string>();
    const std::string label = e.at("label").get<std::string>();
    m.entries.push_back({rel.is_absolute() ? rel : base / rel, m.class_index(label)});
  }
  finalize_manifest(m);
  return m;
}

}  // namespace

DatasetManifest load_manifest(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("manifest path not found: " + path.string());
  return fs::is_directory(path) ? manifest_from_directory(path) : manifest_from_json(path);
}

// ---------------------------------------------------------------------------
// Spectrograms

void SpectrogramConfig::validate() const {
  if (n_fft <= 1 || hop_length <= 0 || hop_length > n_fft) {
    throw ValidationError("spectrogram config: need 0 < hop_length <= n_fft");
  }
  if (n_mels <= 0 || frames_per_window <= 0) {
    throw ValidationError("spectrogram config: n_mels and frames_per_window must be positive");
  }
  if (sample_rate <= 0) throw ValidationError("spectrogram config: sample_rate must be positive");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw ValidationError("spectrogram config: need 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!(log_floor > 0.0)) throw ValidationError("spectrogram config: log_floor must be positive");
}

void to_json(json& j, const SpectrogramConfig& c) {
  j = json{{"n_fft", c.n_fft},
           {"hop_length", c.hop_length},
           {"n_mels", c.n_mels},
           {"frames_per_window", c.frames_per_window},
           {"sample_rate", c.sample_rate},
           {"fmin", c.fmin},
           {"fmax", c.fmax},
           {"log_floor", c.log_floor},
           {"allow_resample", c.allow_resample}};
}

void from_json(const json& j, SpectrogramConfig& c) {
  static const std::set<std::string> known = {"n_fft", "hop_length", "n_mels", "frames_per_window",
                                              "sample_rate", "fmin", "fmax", "log_floor",
                                              "allow_resample"};
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ValidationError("spectrogram config: unknown key '" + k + "'");
  }
  c.n_fft = j.value("n_fft", c.n_fft);
  c.hop_length = j.value("hop_length", c.hop_length);
  c.n_mels = j.value("n_mels", c.n_mels);
  c.frames_per_window = j.value("frames_per_window", c.frames_per_window);
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.fmin = j.value("fmin", c.fmin);
  c.fmax = j.value("fmax", c.fmax);
  c.log_floor = j.value("log_floor", c.log_floor);
  c.allow_resample = j.value("allow_resample", c.allow_resample);
}

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

namespace {

// n_mels + 2 edge frequencies, evenly spaced on the mel scale.
std::vector<double> mel_edges(const SpectrogramConfig& cfg) {
  const double lo = hz_to_mel(cfg.fmin);
  const double hi = hz_to_mel(cfg.fmax);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels) + 2);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = mel_to_hz(lo + (hi - lo) * static_cast<double>(i) /
                                  static_cast<double>(cfg.n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> mel_center_frequencies(const SpectrogramConfig& cfg) {
  const auto edges = mel_edges(cfg);
  return {edges.begin() + 1, edges.end() - 1};
}

std::vector<double> mel_filterbank(const SpectrogramConfig& cfg) {
  cfg.validate();
  const auto edges = mel_edges(cfg);
  const std::size_t bins = static_cast<std::size_t>(cfg.n_fft) / 2 + 1;
  std::vector<double> fb(static_cast<std::size_t>(cfg.n_mels) * bins, 0.0);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double left = edges[m];
    const double center = edges[m + 1];
    const double right = edges[m + 2];
    bool any = false;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / cfg.n_fft;
      double w = 0.0;
      if (f > left && f <= center) {
        w = (f - left) / (center - left);
      } else if (f > center && f < right) {
        w = (right - f) / (right - center);
      }
      fb[m * bins + k] = w;
      any = any || w > 0.0;
    }
    if (!any) {
      throw ValidationError("mel filter " + std::to_string(m) +
                            " covers no FFT bin; increase n_fft or reduce n_mels");
    }
  }
  return fb;
}

std::size_t stft_frame_count(std::size_t n_samples, const SpectrogramConfig& cfg) {
  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  if (n_samples < n_fft) return 0;
  return 1 + (n_samples - n_fft) / static_cast<std::size_t>(cfg.hop_length);
}

std::vector<double> power_spectrogram(std::span<const float> samples,
                                      const SpectrogramConfig& cfg) {
  const std::size_t frames = stft_frame_count(samples.size(), cfg);
  const auto n_fft = static_cast<std::size_t>(cfg.n_fft);
  detail::RealFft fft(n_fft);
  const auto window = detail::hann_window(n_fft);
  std::vector<double> frame(n_fft);
  std::vector<std::complex<double>> spec(fft.bins());
  std::vector<double> power(frames * fft.bins());
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * static_cast<std::size_t>(cfg.hop_length);
    for (std::size_t i = 0; i < n_fft; ++i) frame[i] = samples[start + i] * window[i];
    fft.forward(frame, spec);
    for (std::size_t k = 0; k < fft.bins(); ++k) power[t * fft.bins() + k] = std::norm(spec[k]);
  }
  return power;
}

std::pair<std::size_t, std::size_t> window_sample_range(int window_index,
                                                        const SpectrogramConfig& cfg) {
  const auto hop = static_cast<std::size_t>(cfg.hop_length);
  const auto first = static_cast<std::size_t>(window_index) * cfg.frames_per_window;
  const std::size_t begin = first * hop;
  const std::size_t end = (first + cfg.frames_per_window - 1) * hop + cfg.n_fft;
  return {begin, end};
}

std::vector<MelSpectrogram> compute_mel_spectrograms(const AudioClip& clip,
                                                     const SpectrogramConfig& cfg) {
  cfg.validate();
  validate_clip(clip);
  std::vector<float> resampled;
  std::span<const float> samples = clip.samples;
  if (clip.sample_rate != cfg.sample_rate) {
    if (!cfg.allow_resample) {
      throw ValidationError("clip '" + clip.source_id + "' has sample rate " +
                            std::to_string(clip.sample_rate) + " but config expects " +
                            std::to_string(cfg.sample_rate) + " and resampling is disabled");
    }
    resampled = resample(clip.samples, clip.sample_rate, cfg.sample_rate);
    samples = resampled;
  }

  const std::size_t frames = stft_frame_count(samples.size(), cfg);
  const std::size_t n_windows = frames / static_cast<std::size_t>(cfg.frames_per_window);
  if (n_windows == 0) return {};

  const auto fb = mel_filterbank(cfg);
  const std::size_t bins = static_cast<std::size_t>(cfg.n_fft) / 2 + 1;
  // Only frames belonging to whole windows are transformed.
  const std::size_t used = n_windows * cfg.frames_per_window;
  const std::size_t needed = (used - 1) * cfg.hop_length + cfg.n_fft;
  const auto power = power_spectrogram(samples.first(needed), cfg);

  std::vector<MelSpectrogram> out;
  out.reserve(n_windows);
  for (std::size_t w = 0; w < n_windows; ++w) {
    MelSpectrogram spec;
    spec.n_mels = cfg.n_mels;
    spec.n_frames = cfg.frames_per_window;
    spec.values.resize(static_cast<std::size_t>(cfg.n_mels) * cfg.frames_per_window);
    spec.label = clip.label;
    spec.source_id = clip.source_id;
    spec.window_index = static_cast<int>(w);
    for (int t = 0; t < cfg.frames_per_window; ++t) {
      const double* p = &power[(w * cfg.frames_per_window + t) * bins];
      for (int m = 0; m < cfg.n_mels; ++m) {
        const double* row = &fb[m * bins];
        double acc = 0.0;
        for (std::size_t k = 0; k < bins; ++k) acc += row[k] * p[k];
        spec.at(m, t) = static_cast<float>(std::log(acc + cfg.log_floor));
      }
    }
    out.push_back(std::move(spec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Normalization

void to_json(json& j, const NormalizationStats& s) {
  j = json{{"mean", s.mean}, {"std", s.std}, {"n_samples", s.n_samples}};
}

void from_json(const json& j, NormalizationStats& s) {
  s.mean = j.at("mean").get<double>();
  s.std = j.at("std").get<double>();
  s.n_samples = j.at("n_samples").get<std::size_t>();
}

NormalizationStats fit_normalization(std::span<const MelSpectrogram> specs) {
  if (specs.empty()) throw ValidationError("fit_normalization: empty collection");
  // Welford accumulation merged per spectrogram.
  double mean = 0.0;
  double m2 = 0.0;
  std::size_t n = 0;
  for (const auto& s : specs) {
    if (s.normalized) throw ValidationError("fit_normalization: input already normalized");
    double smean = 0.0;
    double sm2 = 0.0;
    std::size_t sn = 0;
    for (float v : s.values) {
      ++sn;
      const double d = v - smean;
      smean += d / static_cast<double>(sn);
      sm2 += d * (v - smean);
    }
    if (sn == 0) continue;
    const double total = static_cast<double>(n + sn);
    const double delta = smean - mean;
    mean += delta * static_cast<double>(sn) / total;
    m2 += sm2 + delta * delta * static_cast<double>(n) * static_cast<double>(sn) / total;
    n += sn;
  }
  const double var = n > 0 ? m2 / static_cast<double>(n) : 0.0;
  if (!(var > 0.0)) {
    throw ValidationError(
        "fit_normalization: zero variance; the spectrogram corpus is degenerate (all cells equal)");
  }
  return {mean, std::sqrt(var), n};
}

MelSpectrogram normalize(const MelSpectrogram& spec, const NormalizationStats& stats) {
  if (spec.normalized) throw ValidationError("normalize: spectrogram is already normalized");
  if (!(stats.std > 0.0)) throw ValidationError("normalize: std must be positive");
  MelSpectrogram out = spec;
  for (float& v : out.values) v = static_cast<float>((v - stats.mean) / stats.std);
  out.normalized = true;
  return out;
}

MelSpectrogram denormalize(const MelSpectrogram& spec, const NormalizationStats& stats) {
  if (!spec.normalized) throw ValidationError("denormalize: spectrogram is not normalized");
  MelSpectrogram out = spec;
  for (float& v : out.values) v = static_cast<float>(v * stats.std + stats.mean);
  out.normalized = false;
  return out;
}

// ---------------------------------------------------------------------------
// Corpus persistence

std::vector<int> SpectrogramCorpus::per_class_counts() const {
  std::vector<int> counts(classes.size(), 0);
  for (const auto& s : items) ++counts.at(static_cast<std::size_t>(s.label));
  return counts;
}

std::vector<int> SpectrogramCorpus::labels() const {
  std::vector<int> out;
  out.reserve(items.size());
  for (const auto& s : items) out.push_back(s.label);
  return out;
}

namespace {

constexpr const char* kCorpusFormat = "cgaug-spectrogram-corpus";

void write_le_float(std::string& out, float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFF));
}

float read_le_float(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

void save_corpus(const SpectrogramCorpus& corpus, const fs::path& path) {
  const int n_mels = corpus.items.empty() ? corpus.config.n_mels : corpus.items.front().n_mels;
  const int n_frames =
      corpus.items.empty() ? corpus.config.frames_per_window : corpus.items.front().n_frames;
  json labels = json::array();
  json sources = json::array();
  json windows = json::array();
  json synthetic = json::array();
  bool normalized = !corpus.items.empty();
  for (const auto& s : corpus.items) {
    if (s.n_mels != n_mels || s.n_frames != n_frames) {
      throw ShapeError("save_corpus: items have inconsistent shapes");
    }
    labels.push_back(s.label);
    sources.push_back(s.source_id);
    windows.push_back(s.window_index);
    synthetic.push_back(s.synthetic);
    normalized = normalized && s.normalized;
  }
  json header{{"format", kCorpusFormat},
              {"version", 1},
              {"dtype", "float32-le"},
              {"shape", {corpus.items.size(), n_mels, n_frames}},
              {"classes", corpus.classes},
              {"labels", labels},
              {"sources", sources},
              {"windows", windows},
              {"synthetic", synthetic},
              {"normalized", normalized},
              {"normalization", corpus.stats ? json(*corpus.stats) : json(nullptr)},
              {"spectrogram_config", corpus.config},
              {"config_hash", corpus.config_hash}};

  std::string payload = header.dump();
  payload.push_back('\n');
  payload.reserve(payload.size() + corpus.items.size() * n_mels * n_frames * 4);
  for (const auto& s : corpus.items) {
    for (float v : s.values) write_le_float(payload, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write corpus: " + path.string());
  f.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

SpectrogramCorpus load_corpus(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open corpus: " + path.string());
  std::string line;
  std::getline(f, line);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError("corpus header of " + path.string() + ": " + e.what());
  }
  if (header.value("format", "") != kCorpusFormat) {
    throw ValidationError("not a spectrogram corpus file: " + path.string());
  }
  const auto shape = header.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 3) throw ShapeError("corpus shape must have rank 3");
  const std::size_t n = shape[0];
  const std::size_t cells = shape[1] * shape[2];

  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() != n * cells * 4) {
    throw ValidationError("corpus payload size mismatch in " + path.string());
  }

  SpectrogramCorpus corpus;
  corpus.classes = header.at("classes").get<std::vector<std::string>>();
  corpus.config = header.at("spectrogram_config").get<SpectrogramConfig>();
  if (!header.at("normalization").is_null()) {
    corpus.stats = header.at("normalization").get<NormalizationStats>();
  }
  corpus.config_hash = header.value("config_hash", "");
  const auto labels = header.at("labels").get<std::vector<int>>();
  const auto sources = header.at("sources").get<std::vector<std::string>>();
  const auto windows = header.at("windows").get<std::vector<int>>();
  const auto synthetic = header.at("synthetic").get<std::vector<bool>>();
  const bool normalized = header.at("normalized").get<bool>();
  if (labels.size() != n || sources.size() != n || windows.size() != n || synthetic.size() != n) {
    throw ValidationError("corpus metadata length mismatch in " + path.string());
  }
  corpus.items.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& s = corpus.items[i];
    s.n_mels = static_cast<int>(shape[1]);
    s.n_frames = static_cast<int>(shape[2]);
    s.label = labels[i];
    if (s.label < 0 || static_cast<std::size_t>(s.label) >= corpus.classes.size()) {
      throw ValidationError("corpus label out of range in " + path.string());
    }
    s.source_id = sources[i];
    s.window_index = windows[i];
    s.synthetic = synthetic[i];
    s.normalized = normalized;
    s.values.resize(cells);
    const unsigned char* p = bytes.data() + i * cells * 4;
    for (std::size_t c = 0; c < cells; ++c) s.values[c] = read_le_float(p + 4 * c);
  }
  return corpus;
}

PreprocessResult build_corpus(const DatasetManifest& manifest, const SpectrogramConfig& cfg) {
  cfg.validate();
  PreprocessResult result;
  result.corpus.classes = manifest.classes;
  result.corpus.config = cfg;
  std::vector<MelSpectrogram> raw;
  for (const auto& entry : manifest.entries) {
    const AudioClip clip = load_clip(entry.path, entry.label);
    auto specs = compute_mel_spectrograms(clip, cfg);
    if (specs.empty()) result.short_clips.push_back(entry.path.string());
    for (auto& s : specs) raw.push_back(std::move(s));
  }
  if (raw.empty()) return result;
  const auto stats = fit_normalization(raw);
  result.corpus.stats = stats;
  result.corpus.items.reserve(raw.size());
  for (const auto& s : raw) result.corpus.items.push_back(normalize(s, stats));
  return result;
}

}  // namespace cgaug
