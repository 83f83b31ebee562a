#include "cgaug/fid.hpp"

#include <cmath>
#include <sstream>

#include "cgaug/errors.hpp"
#include "cgaug/log.hpp"

namespace cgaug {

namespace {

constexpr double kEigenClamp = 1e-10;

void check_features(const Eigen::MatrixXd& f, const char* which) {
  if (f.rows() < 2) {
    throw ValidationError(std::string("compute_fid: ") + which + " set needs at least 2 samples");
  }
  if (!f.allFinite()) {
    throw ValidationError(std::string("compute_fid: ") + which + " features contain non-finite values");
  }
}

// Symmetric PSD square root; eigenvalues below zero (round-off) are clamped.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("compute_fid: covariance eigensolver failed");
  const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Eigen::VectorXd feature_mean(const Eigen::MatrixXd& features) {
  return features.colwise().mean().transpose();
}

Eigen::MatrixXd feature_covariance(const Eigen::MatrixXd& features) {
  const Eigen::MatrixXd centered = features.rowwise() - features.colwise().mean();
  return centered.transpose() * centered / static_cast<double>(features.rows() - 1);
}

FidResult compute_fid(const Eigen::MatrixXd& real_features, const Eigen::MatrixXd& gen_features) {
  check_features(real_features, "real");
  check_features(gen_features, "generated");
  if (real_features.cols() != gen_features.cols()) {
    throw ValidationError("compute_fid: feature dimensions differ");
  }

  FidResult r;
  r.n_real = static_cast<std::size_t>(real_features.rows());
  r.n_gen = static_cast<std::size_t>(gen_features.rows());
  r.mu_r = feature_mean(real_features);
  r.mu_g = feature_mean(gen_features);
  const Eigen::MatrixXd cov_r = feature_covariance(real_features);
  const Eigen::MatrixXd cov_g = feature_covariance(gen_features);

  const Eigen::MatrixXd root_r = psd_sqrt(cov_r);
  Eigen::MatrixXd similar = root_r * cov_g * root_r;
  similar = 0.5 * (similar + similar.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(similar, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("compute_fid: product eigensolver failed");

  const double scale = std::max({cov_r.norm(), cov_g.norm(), 1.0});
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    double lambda = es.eigenvalues()(i);
    if (lambda < 0.0) {
      if (lambda < -1e-6 * scale * scale) {
        std::ostringstream msg;
        msg << "compute_fid: covariance product has eigenvalue " << lambda
            << " (||C_r|| = " << cov_r.norm() << ", ||C_g|| = " << cov_g.norm()
            << "); matrix square root is ill-defined";
        throw NumericalError(msg.str());
      }
      if (lambda < -kEigenClamp) {
        warn("compute_fid: clamped negative eigenvalue " + std::to_string(lambda) + " to zero");
      }
      lambda = 0.0;
    }
    trace_sqrt += std::sqrt(lambda);
  }

  r.mean_term = (r.mu_r - r.mu_g).squaredNorm();
  r.trace_term = cov_r.trace() + cov_g.trace() - 2.0 * trace_sqrt;
  r.value = r.mean_term + r.trace_term;
  if (r.value < 0.0) {
    if (-r.value < 1e-6 * scale) {
      warn("compute_fid: clamped tiny negative FID " + std::to_string(r.value) + " to zero");
      r.value = 0.0;
      r.clamped = true;
    } else {
      throw NumericalError("compute_fid: negative distance " + std::to_string(r.value));
    }
  }
  return r;
}

}  // namespace cgaug
