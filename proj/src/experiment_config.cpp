#include "cgaug/experiment_config.hpp"

#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "cgaug/errors.hpp"
#include "cgaug/seeding.hpp"

namespace cgaug {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (!known.contains(k)) throw ValidationError(where + ": unknown key '" + k + "'");
  }
}

template <typename T>
void read_section(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  out = j.at(key).get<T>();
}

enum Stream : std::uint64_t {
  kCvStream = 1,
  kGanStream = 2,
  kExtractorStream = 3,
  kProbeStream = 4,
  kGenerationStream = 5,
  kPolicyStream = 100,
};

}  // namespace

ExperimentConfig::ExperimentConfig() {
  for (auto kind : {AugmentationKind::kWhiteNoise, AugmentationKind::kPitchShift, AugmentationKind::kTimeStretch,
                    AugmentationKind::kSpecAugment}) {
    AugmentationPolicy p;
    p.kind = kind;
    augmentation.push_back(p);
  }
  derive_seeds();
}

void ExperimentConfig::derive_seeds() {
  evaluation.cv.seed = derive_seed(seed, kCvStream);
  gan.training.seed = derive_seed(seed, kGanStream);
  evaluation.feature_extractor.seed = derive_seed(seed, kExtractorStream);
  for (std::size_t i = 0; i < augmentation.size(); ++i) {
    augmentation[i].rng_seed = derive_seed(seed, kPolicyStream + i);
  }
}

std::uint64_t ExperimentConfig::generation_seed() const { return derive_seed(seed, kGenerationStream); }
std::uint64_t ExperimentConfig::probe_seed() const { return derive_seed(seed, kProbeStream); }

void ExperimentConfig::validate() const {
  dataset.spectrogram.validate();
  for (const auto& p : augmentation) p.validate();
  gan.generator.validate();
  gan.critic.validate();
  gan.training.validate();
  if (gan.generator.n_classes != gan.critic.n_classes) {
    throw ValidationError("gan: generator and critic class counts differ");
  }
  if (gan.generator.output_size != gan.critic.input_size) {
    throw ValidationError("gan: generator output size and critic input size differ");
  }
  if (evaluation.probe_size < 1) throw ValidationError("evaluation: probe_size must be positive");
  if (evaluation.cv.n_folds < 2) throw ValidationError("evaluation: n_folds must be at least 2");
}

const AugmentationPolicy& ExperimentConfig::policy(AugmentationKind kind) const {
  for (const auto& p : augmentation) {
    if (p.kind == kind) return p;
  }
  throw ValidationError("no augmentation policy of kind '" + to_string(kind) + "' in the config");
}

void to_json(json& j, const ExperimentConfig& c) {
  j = json{{"seed", c.seed},
           {"output_root", c.output_root.string()},
           {"dataset",
            {{"manifest", c.dataset.manifest.string()},
             {"corpus", c.dataset.corpus.string()},
             {"spectrogram", c.dataset.spectrogram}}},
           {"augmentation", c.augmentation},
           {"gan", {{"generator", c.gan.generator}, {"critic", c.gan.critic}, {"training", c.gan.training}}},
           {"evaluation",
            {{"cv", c.evaluation.cv},
             {"feature_extractor", c.evaluation.feature_extractor},
             {"feature_resnet", c.evaluation.feature_resnet},
             {"probe_size", c.evaluation.probe_size}}}};
}

void from_json(const json& j, ExperimentConfig& c) {
  reject_unknown(j, {"seed", "output_root", "dataset", "augmentation", "gan", "evaluation"}, "config");
  c.seed = j.value("seed", c.seed);
  if (j.contains("output_root")) c.output_root = j.at("output_root").get<std::string>();
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    reject_unknown(d, {"manifest", "corpus", "spectrogram"}, "dataset");
    if (d.contains("manifest")) c.dataset.manifest = d.at("manifest").get<std::string>();
    if (d.contains("corpus")) c.dataset.corpus = d.at("corpus").get<std::string>();
    read_section(d, "spectrogram", c.dataset.spectrogram);
  }
  if (j.contains("augmentation")) {
    c.augmentation = j.at("augmentation").get<std::vector<AugmentationPolicy>>();
  }
  if (j.contains("gan")) {
    const auto& g = j.at("gan");
    reject_unknown(g, {"generator", "critic", "training"}, "gan");
    read_section(g, "generator", c.gan.generator);
    read_section(g, "critic", c.gan.critic);
    read_section(g, "training", c.gan.training);
  }
  if (j.contains("evaluation")) {
    const auto& e = j.at("evaluation");
    reject_unknown(e, {"cv", "feature_extractor", "feature_resnet", "probe_size"}, "evaluation");
    read_section(e, "cv", c.evaluation.cv);
    read_section(e, "feature_extractor", c.evaluation.feature_extractor);
    read_section(e, "feature_resnet", c.evaluation.feature_resnet);
    c.evaluation.probe_size = e.value("probe_size", c.evaluation.probe_size);
  }
  c.derive_seeds();
  c.validate();
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  ExperimentConfig c;
  try {
    c = j.get<ExperimentConfig>();
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  if (!c.dataset.manifest.empty() && c.dataset.manifest.is_relative()) {
    c.dataset.manifest = path.parent_path() / c.dataset.manifest;
  }
  return c;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const ExperimentConfig& c) {
  json j = c;
  j.erase("output_root");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

}  // namespace cgaug
