#include "cgaug/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cgaug/errors.hpp"

namespace cgaug {

std::vector<double> per_class_f1(std::span<const int> predictions, std::span<const int> truths,
                                 int n_classes) {
  if (predictions.empty()) throw ValidationError("macro_f1: empty input");
  if (predictions.size() != truths.size()) throw ValidationError("macro_f1: length mismatch");
  if (n_classes <= 0) throw ValidationError("macro_f1: n_classes must be positive");
  std::vector<long> tp(n_classes, 0), fp(n_classes, 0), fn(n_classes, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i];
    const int t = truths[i];
    if (p < 0 || p >= n_classes || t < 0 || t >= n_classes) {
      throw ValidationError("macro_f1: class index out of range");
    }
    if (p == t) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  std::vector<double> f1(n_classes, 0.0);
  for (int c = 0; c < n_classes; ++c) {
    const long denom = 2 * tp[c] + fp[c] + fn[c];
    f1[c] = denom > 0 ? 2.0 * static_cast<double>(tp[c]) / static_cast<double>(denom) : 0.0;
  }
  return f1;
}

double macro_f1(std::span<const int> predictions, std::span<const int> truths, int n_classes) {
  const auto f1 = per_class_f1(predictions, truths, n_classes);
  return std::accumulate(f1.begin(), f1.end(), 0.0) / static_cast<double>(n_classes);
}

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

double sample_std(std::span<const double> values) {
  if (values.size() < 2) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::vector<int> stratified_folds(std::span<const int> labels, int n_classes, int n_folds,
                                  std::uint64_t seed) {
  if (n_folds < 2) throw ValidationError("stratified_folds: need at least 2 folds");
  std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= n_classes) {
      throw ValidationError("stratified_folds: label out of range");
    }
    by_class[labels[i]].push_back(i);
  }
  std::vector<int> fold(labels.size(), -1);
  std::mt19937_64 rng(seed);
  int offset = 0;
  for (int c = 0; c < n_classes; ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (static_cast<int>(members.size()) < n_folds) {
      throw ValidationError("stratification error: class " + std::to_string(c) + " has " +
                            std::to_string(members.size()) + " items, fewer than " +
                            std::to_string(n_folds) + " folds");
    }
    std::shuffle(members.begin(), members.end(), rng);
    // Rotating the starting fold per class keeps overall fold sizes balanced.
    for (std::size_t k = 0; k < members.size(); ++k) {
      fold[members[k]] = static_cast<int>((k + offset) % n_folds);
    }
    offset = static_cast<int>((offset + members.size()) % n_folds);
  }
  return fold;
}

}  // namespace cgaug
