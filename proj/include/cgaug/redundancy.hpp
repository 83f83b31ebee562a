#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>
#include <torch/torch.h>

#include "cgaug/correlation.hpp"
#include "cgaug/gan_models.hpp"

namespace cgaug {

struct ProbeBatch {
  torch::Tensor latents;  // (B, latent_dim)
  torch::Tensor labels;   // (B,), labels cycle through the classes
};

ProbeBatch make_probe_batch(int batch_size, int latent_dim, int n_classes, std::uint64_t seed);

// Records one named generator layer as B x H x W x C. Throws ValidationError
// naming the available layers when `layer` is unknown.
ActivationSample capture_activations(Generator& generator, const std::string& layer, const ProbeBatch& probe);
ActivationSample capture_activations(const std::filesystem::path& checkpoint_dir, const std::string& layer,
                                     const ProbeBatch& probe);

struct LayerReport {
  std::string layer;
  std::array<std::int64_t, 4> shape{};
  double redundancy = 0.0;
  CorrelationMatrix matrix;
};

struct ModelComparison {
  LayerReport proposed;
  LayerReport baseline;
  std::uint64_t probe_seed = 0;
  int probe_size = 0;
  std::string lower;  // "proposed", "baseline" or "tie"
  std::string config_hash;
};

void to_json(nlohmann::json& j, const ModelComparison& c);

// Default layers: the residual SE output of the proposed model against the
// last upsampling block of the baseline (both 32x32x64 by default).
inline constexpr const char* kProposedProbeLayer = "se_stage";
inline constexpr const char* kBaselineProbeLayer = "block4";

// Correlation matrices and scores of matched layers. When out_dir is not
// empty, writes {proposed,baseline}_correlation.{png,csv} and
// redundancy.json there. Throws ValidationError if the layers differ in
// H x W x C.
ModelComparison compare_models(Generator& proposed, Generator& baseline, const std::string& proposed_layer,
                               const std::string& baseline_layer, std::uint64_t probe_seed, int probe_size,
                               const std::filesystem::path& out_dir = {}, const std::string& config_hash = {});

}  // namespace cgaug
