#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cgaug {

// Activations captured from one layer, stored as row-major B x H x W x C.
struct ActivationSample {
  std::string layer_name;
  std::array<std::int64_t, 4> shape{};  // B, H, W, C
  std::vector<float> values;

  std::int64_t channels() const { return shape[3]; }
  std::int64_t observations() const { return shape[0] * shape[1] * shape[2]; }
};

struct CorrelationMatrix {
  std::string layer_name;
  Eigen::MatrixXd values;
  std::int64_t n_observations = 0;
};

// Pearson correlation between channel pairs over the flattened B*H*W axis.
// Constant channels get zero off-diagonal entries (with a warning) and a unit
// diagonal.
CorrelationMatrix channel_correlation(const ActivationSample& sample);

// Same computation on an observations x channels matrix.
CorrelationMatrix channel_correlation(const Eigen::MatrixXd& observations,
                                      const std::string& layer_name = {});

// Mean absolute off-diagonal entry.
double redundancy_score(const CorrelationMatrix& matrix);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path);

}  // namespace cgaug
