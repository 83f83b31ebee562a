#include "cgaug/cross_validation.hpp"

#include <set>

#include <nlohmann/json.hpp>

#include "cgaug/errors.hpp"
#include "cgaug/log.hpp"
#include "cgaug/metrics.hpp"
#include "cgaug/seeding.hpp"

namespace cgaug {

using nlohmann::json;

void assert_no_synthetic(std::span<const MelSpectrogram> validation) {
  for (const auto& s : validation) {
    if (s.synthetic) throw LeakageError("synthetic sample '" + s.source_id + "' found in a validation split");
  }
}

void to_json(json& j, const CvConfig& c) {
  j = json{{"n_folds", c.n_folds}, {"seed", c.seed}, {"classifier", c.classifier}, {"resnet", c.resnet}};
}

void from_json(const json& j, CvConfig& c) {
  for (const auto& [k, v] : j.items()) {
    if (k != "n_folds" && k != "seed" && k != "classifier" && k != "resnet") {
      throw ValidationError("cv config: unknown key '" + k + "'");
    }
  }
  c.n_folds = j.value("n_folds", c.n_folds);
  c.seed = j.value("seed", c.seed);
  if (j.contains("classifier")) c.classifier = j.at("classifier").get<ClassifierConfig>();
  if (j.contains("resnet")) c.resnet = j.at("resnet").get<ResNetSpec>();
  if (c.n_folds < 2) throw ValidationError("cv config: n_folds must be at least 2");
}

FoldSplit make_fold(const SpectrogramCorpus& corpus, std::span<const int> folds, int k, Augmenter& augmenter) {
  if (folds.size() != corpus.items.size()) throw ValidationError("make_fold: fold vector does not match corpus");
  const int n_classes = static_cast<int>(corpus.classes.size());
  FoldSplit split;
  split.real_train_counts.assign(static_cast<std::size_t>(n_classes), 0);
  for (std::size_t i = 0; i < corpus.items.size(); ++i) {
    const auto& item = corpus.items[i];
    if (folds[i] == k) {
      split.validation.push_back(item);
    } else {
      split.train.push_back(item);
      ++split.real_train_counts[static_cast<std::size_t>(item.label)];
    }
  }
  split.train_counts = split.real_train_counts;
  if (augmenter.augments()) {
    auto extra = augmenter.augment(split.train, n_classes, k);
    std::vector<int> extra_counts(static_cast<std::size_t>(n_classes), 0);
    for (const auto& s : extra) {
      if (!s.synthetic) throw LeakageError("augmenter '" + augmenter.name() + "' returned an item not flagged synthetic");
      if (s.label < 0 || s.label >= n_classes) throw ValidationError("augmenter returned an unknown class");
      ++extra_counts[static_cast<std::size_t>(s.label)];
    }
    if (extra_counts != split.real_train_counts) {
      throw ValidationError("augmenter '" + augmenter.name() + "' did not double the per-class training counts");
    }
    for (std::size_t c = 0; c < extra_counts.size(); ++c) split.train_counts[c] += extra_counts[c];
    for (auto& s : extra) split.train.push_back(std::move(s));
  }
  assert_no_synthetic(split.validation);
  return split;
}

CvReport run_cv_experiment(const SpectrogramCorpus& corpus, Augmenter& augmenter, const CvConfig& config,
                           const FoldCallback& on_fold) {
  if (corpus.items.empty()) throw ValidationError("run_cv_experiment: empty corpus");
  if (!corpus.stats) throw ValidationError("run_cv_experiment: corpus must be normalized");
  const int n_classes = static_cast<int>(corpus.classes.size());
  const auto labels = corpus.labels();

  CvReport report;
  report.augmentation_name = augmenter.name();
  report.seed = config.seed;
  report.n_folds = config.n_folds;
  report.config = config;
  report.config_hash = corpus.config_hash;
  report.folds = stratified_folds(labels, n_classes, config.n_folds, config.seed);

  ResNetSpec spec = config.resnet;
  spec.n_classes = n_classes;
  for (int k = 0; k < config.n_folds; ++k) {
    const FoldSplit split = make_fold(corpus, report.folds, k, augmenter);
    report.train_counts.push_back(split.train_counts);

    ClassifierConfig cc = config.classifier;
    cc.seed = derive_seed(config.seed, 1000 + static_cast<std::uint64_t>(k));
    torch::manual_seed(cc.seed);
    ResNet18 net(spec);
    train_classifier(net, stack_spectrograms(split.train), stack_labels(split.train), cc);

    std::vector<int> truths;
    truths.reserve(split.validation.size());
    for (const auto& s : split.validation) truths.push_back(s.label);
    const auto preds = predict(net, stack_spectrograms(split.validation));
    const double f1 = macro_f1(preds, truths, n_classes);
    report.per_fold_f1.push_back(f1);
    if (on_fold) on_fold(k, f1);
  }
  report.mean = mean(report.per_fold_f1);
  report.std = sample_std(report.per_fold_f1);
  return report;
}

double relative_improvement(const CvReport& report, const CvReport& baseline) {
  if (report.folds != baseline.folds || report.n_folds != baseline.n_folds ||
      report.per_fold_f1.size() != baseline.per_fold_f1.size()) {
    throw ValidationError("relative_improvement: reports were computed on different folds");
  }
  return 100.0 * (report.mean - baseline.mean);
}

void to_json(json& j, const CvReport& r) {
  j = json{{"augmentation", r.augmentation_name},
           {"per_fold_f1", r.per_fold_f1},
           {"mean", r.mean},
           {"std", r.std},
           {"relative_improvement", r.relative_improvement ? json(*r.relative_improvement) : json(nullptr)},
           {"fid", r.fid ? json(*r.fid) : json(nullptr)},
           {"folds", r.folds},
           {"seed", r.seed},
           {"n_folds", r.n_folds},
           {"train_counts", r.train_counts},
           {"config", r.config},
           {"config_hash", r.config_hash}};
}

void from_json(const json& j, CvReport& r) {
  r.augmentation_name = j.at("augmentation").get<std::string>();
  r.per_fold_f1 = j.at("per_fold_f1").get<std::vector<double>>();
  r.mean = j.at("mean").get<double>();
  r.std = j.at("std").get<double>();
  if (!j.at("relative_improvement").is_null()) r.relative_improvement = j.at("relative_improvement").get<double>();
  if (j.contains("fid") && !j.at("fid").is_null()) r.fid = j.at("fid").get<double>();
  r.folds = j.at("folds").get<std::vector<int>>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n_folds = j.at("n_folds").get<int>();
  r.train_counts = j.value("train_counts", std::vector<std::vector<int>>{});
  if (j.contains("config")) r.config = j.at("config").get<CvConfig>();
  r.config_hash = j.value("config_hash", "");
}

}  // namespace cgaug
