#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace cgaug {

// Unweighted mean over classes of 2TP / (2TP + FP + FN); a class with an
// empty denominator contributes 0.
double macro_f1(std::span<const int> predictions, std::span<const int> truths, int n_classes);

// Per-class F1 in class order.
std::vector<double> per_class_f1(std::span<const int> predictions, std::span<const int> truths,
                                 int n_classes);

double mean(std::span<const double> values);
// Sample (N-1) standard deviation; 0 for fewer than two values.
double sample_std(std::span<const double> values);

// Fold index per item. Items of each class are shuffled with the seed and
// dealt round-robin so per-class fold sizes differ by at most one. Throws
// ValidationError ("stratification") if a present class has fewer members
// than folds.
std::vector<int> stratified_folds(std::span<const int> labels, int n_classes, int n_folds,
                                  std::uint64_t seed);

}  // namespace cgaug
