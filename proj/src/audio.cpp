#include "cgaug/audio.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

#include "cgaug/errors.hpp"

namespace cgaug {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

double sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = std::numbers::pi * x;
  return std::sin(px) / px;
}

// Zero crossings on each side of the interpolation kernel.
constexpr double kKernelHalfWidth = 16.0;

float interpolate_at(std::span<const float> input, double position,
                     double cutoff) {
  const double extent = kKernelHalfWidth / cutoff;
  const auto n = static_cast<std::ptrdiff_t>(input.size());
  const auto lo = std::max<std::ptrdiff_t>(0, static_cast<std::ptrdiff_t>(std::ceil(position - extent)));
  const auto hi = std::min<std::ptrdiff_t>(n - 1, static_cast<std::ptrdiff_t>(std::floor(position + extent)));
  double acc = 0.0;
  for (std::ptrdiff_t k = lo; k <= hi; ++k) {
    const double d = position - static_cast<double>(k);
    const double w = 0.5 * (1.0 + std::cos(std::numbers::pi * d / extent));
    acc += input[static_cast<std::size_t>(k)] * cutoff * sinc(cutoff * d) * w;
  }
  return static_cast<float>(acc);
}

}  // namespace

void validate_clip(const AudioClip& clip) {
  if (clip.sample_rate <= 0) {
    throw ValidationError("clip '" + clip.source_id + "': sample rate must be positive");
  }
  if (clip.samples.empty()) {
    throw ValidationError("clip '" + clip.source_id + "': no samples");
  }
  for (float s : clip.samples) {
    if (!std::isfinite(s)) {
      throw ValidationError("clip '" + clip.source_id + "': non-finite sample");
    }
  }
}

WavData read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw ValidationError("not a RIFF/WAVE file: " + path.string());
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  const unsigned char* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t avail = std::min<std::size_t>(size, bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (avail < 16) throw ValidationError("truncated fmt chunk: " + path.string());
      format = read_u16(chunk + 8);
      channels = read_u16(chunk + 10);
      rate = read_u32(chunk + 12);
      bits = read_u16(chunk + 22);
      if (format == kFormatExtensible) {
        if (avail < 26) throw ValidationError("truncated extensible fmt chunk: " + path.string());
        format = read_u16(chunk + 8 + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      data = bytes.data() + body;
      data_size = avail;
    }
    pos = body + size + (size & 1u);
  }

  if (channels == 0 || rate == 0) throw ValidationError("missing fmt chunk: " + path.string());
  if (data == nullptr) throw ValidationError("missing data chunk: " + path.string());

  const std::size_t width = bits / 8;
  const bool supported = (format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32)) ||
                         (format == kFormatFloat && bits == 32);
  if (!supported) {
    throw ValidationError("unsupported WAV encoding (format " + std::to_string(format) +
                          ", " + std::to_string(bits) + " bits): " + path.string());
  }

  WavData wav;
  wav.sample_rate = static_cast<int>(rate);
  wav.channels = channels;
  const std::size_t n = data_size / width;
  wav.interleaved.resize(n - n % channels);
  for (std::size_t i = 0; i < wav.interleaved.size(); ++i) {
    const unsigned char* p = data + i * width;
    float v = 0.0f;
    if (format == kFormatFloat) {
      v = std::bit_cast<float>(read_u32(p));
    } else if (bits == 16) {
      v = static_cast<float>(static_cast<std::int16_t>(read_u16(p))) / 32768.0f;
    } else if (bits == 24) {
      std::int32_t s = p[0] | (p[1] << 8) | (p[2] << 16);
      if (s & 0x800000) s |= ~0xFFFFFF;
      v = static_cast<float>(s) / 8388608.0f;
    } else {
      v = static_cast<float>(static_cast<double>(static_cast<std::int32_t>(read_u32(p))) / 2147483648.0);
    }
    wav.interleaved[i] = v;
  }
  return wav;
}

void write_wav(const std::filesystem::path& path, std::span<const float> mono,
               int sample_rate) {
  std::string out;
  const auto data_bytes = static_cast<std::uint32_t>(mono.size() * 2);
  out.append("RIFF");
  put_u32(out, 36 + data_bytes);
  out.append("WAVEfmt ");
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.append("data");
  put_u32(out, data_bytes);
  for (float s : mono) {
    const float c = std::clamp(s, -1.0f, 1.0f);
    const auto q = static_cast<std::int16_t>(std::lround(c * 32767.0f));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write audio file: " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

std::vector<float> downmix(const WavData& wav) {
  if (wav.channels <= 1) return wav.interleaved;
  const std::size_t frames = wav.interleaved.size() / wav.channels;
  std::vector<float> mono(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double acc = 0.0;
    for (int c = 0; c < wav.channels; ++c) acc += wav.interleaved[f * wav.channels + c];
    mono[f] = static_cast<float>(acc / wav.channels);
  }
  return mono;
}

AudioClip load_clip(const std::filesystem::path& path, int label) {
  const WavData wav = read_wav(path);
  AudioClip clip;
  clip.samples = downmix(wav);
  clip.sample_rate = wav.sample_rate;
  clip.label = label;
  clip.source_id = path.string();
  return clip;
}

std::vector<float> resample_to_length(std::span<const float> input,
                                      std::size_t out_len) {
  if (out_len == 0 || input.empty()) return {};
  if (out_len == input.size()) return {input.begin(), input.end()};
  const double step = static_cast<double>(input.size()) / static_cast<double>(out_len);
  const double cutoff = std::min(1.0, 1.0 / step);
  std::vector<float> out(out_len);
  for (std::size_t i = 0; i < out_len; ++i) {
    out[i] = interpolate_at(input, static_cast<double>(i) * step, cutoff);
  }
  return out;
}

std::vector<float> resample(std::span<const float> input, double source_rate,
                            double target_rate) {
  if (source_rate <= 0 || target_rate <= 0) {
    throw ValidationError("resample: rates must be positive");
  }
  if (source_rate == target_rate) return {input.begin(), input.end()};
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(input.size()) * target_rate / source_rate));
  return resample_to_length(input, out_len);
}

}  // namespace cgaug
