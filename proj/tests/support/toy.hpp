#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <torch/torch.h>

#include "cgaug/dataset.hpp"
#include "cgaug/gan_models.hpp"
#include "cgaug/gan_training.hpp"

namespace toy {

// Gaussian blobs whose centre depends on the class, with per-item jitter and
// pixel noise; normalized with corpus-wide stats.
inline cgaug::SpectrogramCorpus blob_corpus(int per_class, int size, int n_classes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05), jitter(0.0, 0.3), amp(1.0, 0.1);
  cgaug::SpectrogramCorpus corpus;
  for (int c = 0; c < n_classes; ++c) corpus.classes.push_back("class" + std::to_string(c));
  corpus.config.n_mels = size;
  corpus.config.frames_per_window = size;
  std::vector<cgaug::MelSpectrogram> raw;
  for (int c = 0; c < n_classes; ++c) {
    const double centre = size * (c + 1.0) / (n_classes + 1.0) - 0.5;
    for (int i = 0; i < per_class; ++i) {
      cgaug::MelSpectrogram s;
      s.n_mels = size;
      s.n_frames = size;
      s.label = c;
      s.source_id = "blob" + std::to_string(c) + "_" + std::to_string(i);
      s.window_index = 0;
      s.values.resize(static_cast<std::size_t>(size * size));
      const double cy = centre + jitter(rng), cx = centre + jitter(rng), a = amp(rng);
      const double width = size / 5.0;
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
          const double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
          s.at(y, x) = static_cast<float>(a * std::exp(-r2 / (2.0 * width * width)) + noise(rng));
        }
      }
      raw.push_back(std::move(s));
    }
  }
  const auto stats = cgaug::fit_normalization(raw);
  corpus.stats = stats;
  for (const auto& s : raw) corpus.items.push_back(cgaug::normalize(s, stats));
  return corpus;
}

inline cgaug::GeneratorSpec generator_spec(int size, int n_classes) {
  cgaug::GeneratorSpec g;
  g.latent_dim = 16;
  g.n_classes = n_classes;
  g.embedding_dim = 4;
  g.initial_channels = 32;
  g.block_channels = {32, 16};
  g.output_size = size;
  g.se_reduction = 4;
  return g;
}

inline cgaug::CriticSpec critic_spec(int size, int n_classes) {
  cgaug::CriticSpec c;
  c.n_classes = n_classes;
  c.input_size = size;
  c.conv_channels = {16, 32};
  c.kernel_size = 3;
  return c;
}

// Fixed random projection of 2x2-average-pooled pixels.
inline cgaug::FeatureFn pooled_features(int dim = 8, std::uint64_t seed = 99) {
  auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
  auto proj = std::make_shared<torch::Tensor>();
  return [dim, gen, proj](const torch::Tensor& x) mutable {
    const auto pooled = torch::avg_pool2d(x, 2).flatten(1).to(torch::kFloat64);
    if (!proj->defined()) *proj = torch::randn({pooled.size(1), dim}, gen, torch::kFloat64) / std::sqrt(pooled.size(1));
    const auto f = torch::tanh(pooled.matmul(*proj)).contiguous();
    Eigen::MatrixXd out(f.size(0), f.size(1));
    const double* p = f.data_ptr<double>();
    for (std::int64_t r = 0; r < f.size(0); ++r)
      for (std::int64_t c = 0; c < f.size(1); ++c) out(r, c) = p[r * f.size(1) + c];
    return out;
  };
}

}  // namespace toy
