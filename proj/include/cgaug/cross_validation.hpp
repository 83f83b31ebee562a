#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cgaug/dataset.hpp"
#include "cgaug/resnet.hpp"

namespace cgaug {

// Produces synthetic training items for one fold. Implementations return
// items flagged synthetic; the harness checks counts and provenance.
class Augmenter {
 public:
  virtual ~Augmenter() = default;
  virtual std::string name() const = 0;
  // False for the no-augmentation baseline.
  virtual bool augments() const { return true; }
  // Exactly one synthetic item per class slot of `train`, i.e. the returned
  // per-class counts equal those of `train`.
  virtual std::vector<MelSpectrogram> augment(std::span<const MelSpectrogram> train, int n_classes,
                                              int fold) = 0;
};

class NoAugmenter final : public Augmenter {
 public:
  std::string name() const override { return "none"; }
  bool augments() const override { return false; }
  std::vector<MelSpectrogram> augment(std::span<const MelSpectrogram>, int, int) override { return {}; }
};

// Raised when a synthetic item reaches a validation split. This indicates a
// harness bug, not bad input.
class LeakageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

void assert_no_synthetic(std::span<const MelSpectrogram> validation);

struct CvConfig {
  int n_folds = 5;
  std::uint64_t seed = 0;
  ClassifierConfig classifier;
  ResNetSpec resnet;
};

void to_json(nlohmann::json& j, const CvConfig& c);
void from_json(const nlohmann::json& j, CvConfig& c);

struct FoldSplit {
  std::vector<MelSpectrogram> train;  // real items followed by synthetic ones
  std::vector<MelSpectrogram> validation;
  std::vector<int> real_train_counts;
  std::vector<int> train_counts;
};

// Builds the split for fold k: validation = items with folds[i] == k, the
// rest trains. When the augmenter augments, its output is appended and the
// per-class training counts must come out exactly doubled.
FoldSplit make_fold(const SpectrogramCorpus& corpus, std::span<const int> folds, int k, Augmenter& augmenter);

struct CvReport {
  std::string augmentation_name;
  std::vector<double> per_fold_f1;
  double mean = 0.0;
  double std = 0.0;
  std::optional<double> relative_improvement;
  std::optional<double> fid;
  std::vector<int> folds;  // fold index per corpus item
  std::uint64_t seed = 0;
  int n_folds = 0;
  std::vector<std::vector<int>> train_counts;  // per fold, per class
  CvConfig config;
  std::string config_hash;
};

void to_json(nlohmann::json& j, const CvReport& r);
void from_json(const nlohmann::json& j, CvReport& r);

using FoldCallback = std::function<void(int fold, double f1)>;

// Stratified k-fold evaluation of a ResNet-18 classifier. Folds depend only
// on (labels, n_folds, seed), so reports with equal seeds are paired.
CvReport run_cv_experiment(const SpectrogramCorpus& corpus, Augmenter& augmenter, const CvConfig& config,
                           const FoldCallback& on_fold = nullptr);

// mean(report) - mean(baseline) in percentage points. Throws ValidationError
// if the reports were not computed on the same folds.
double relative_improvement(const CvReport& report, const CvReport& baseline);

}  // namespace cgaug
