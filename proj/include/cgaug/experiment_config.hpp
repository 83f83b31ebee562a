#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cgaug/classical_augment.hpp"
#include "cgaug/cross_validation.hpp"
#include "cgaug/dataset.hpp"
#include "cgaug/gan_models.hpp"
#include "cgaug/gan_training.hpp"
#include "cgaug/resnet.hpp"

namespace cgaug {

struct ExperimentConfig {
  struct Dataset {
    std::filesystem::path manifest;
    std::filesystem::path corpus = "corpus.bin";  // relative to output_root
    SpectrogramConfig spectrogram;
  } dataset;

  std::vector<AugmentationPolicy> augmentation;  // defaults: one policy per kind

  struct Gan {
    GeneratorSpec generator;
    CriticSpec critic;
    TrainingConfig training;
  } gan;

  struct Evaluation {
    CvConfig cv;
    ClassifierConfig feature_extractor;  // ResNet used as the FID feature tap
    ResNetSpec feature_resnet;
    int probe_size = 256;
  } evaluation;

  std::filesystem::path output_root = "runs";
  std::uint64_t seed = 0;

  ExperimentConfig();

  // Overwrites every component seed with one derived from `seed`.
  void derive_seeds();
  void validate() const;

  const AugmentationPolicy& policy(AugmentationKind kind) const;

  std::filesystem::path corpus_path() const { return output_root / dataset.corpus; }
  std::filesystem::path gan_run_dir() const { return output_root / "gan"; }
  std::filesystem::path baseline_run_dir() const { return output_root / "gan_baseline"; }
  std::filesystem::path feature_extractor_dir() const { return output_root / "feature_extractor"; }

  // Sample-generation and redundancy-probe seeds.
  std::uint64_t generation_seed() const;
  std::uint64_t probe_seed() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
// Strict: unknown keys anywhere raise ValidationError.
void from_json(const nlohmann::json& j, ExperimentConfig& c);

// Parses a config file. Relative manifest paths are resolved against the
// file's directory. Seeds are derived from the global seed.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

// 16 hex digits over the canonical JSON of the config, excluding
// output_root so relocating outputs keeps provenance stable.
std::string config_hash(const ExperimentConfig& c);

// FNV-1a 64 of arbitrary bytes.
std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace cgaug
