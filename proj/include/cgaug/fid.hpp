#pragma once

#include <cstddef>

#include <Eigen/Dense>

namespace cgaug {

struct FidResult {
  double value = 0.0;
  double mean_term = 0.0;   // ||mu_r - mu_g||^2
  double trace_term = 0.0;  // Tr(C_r + C_g - 2 sqrt(C_r C_g))
  Eigen::VectorXd mu_r;
  Eigen::VectorXd mu_g;
  std::size_t n_real = 0;
  std::size_t n_gen = 0;
  bool clamped = false;  // a tiny negative value was clamped to zero
};

// Frechet distance between Gaussian fits of two feature sets (rows are
// samples). Covariances use the unbiased N-1 estimator. Tr(sqrt(C_r C_g)) is
// evaluated through the symmetric similarity form C_r^{1/2} C_g C_r^{1/2}.
//
// Throws ValidationError for fewer than two rows, mismatched widths or
// non-finite features, and NumericalError when the product has eigenvalues
// too negative to be explained by round-off.
FidResult compute_fid(const Eigen::MatrixXd& real_features, const Eigen::MatrixXd& gen_features);

Eigen::VectorXd feature_mean(const Eigen::MatrixXd& features);
Eigen::MatrixXd feature_covariance(const Eigen::MatrixXd& features);

}  // namespace cgaug
