#include "cgaug/correlation.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "cgaug/errors.hpp"
#include "cgaug/log.hpp"

namespace cgaug {

CorrelationMatrix channel_correlation(const Eigen::MatrixXd& obs, const std::string& layer_name) {
  if (obs.cols() < 2) throw ValidationError("channel_correlation: need at least 2 channels");
  if (obs.rows() < 2) throw ValidationError("channel_correlation: need at least 2 observations");
  if (!obs.allFinite()) throw ValidationError("channel_correlation: non-finite activations");

  const Eigen::MatrixXd centered = obs.rowwise() - obs.colwise().mean();
  const Eigen::MatrixXd cov = centered.transpose() * centered;
  const Eigen::Index c = obs.cols();

  Eigen::VectorXd scale(c);
  int constant = 0;
  for (Eigen::Index i = 0; i < c; ++i) {
    const double norm = std::sqrt(cov(i, i));
    // Relative test so a channel that is constant up to round-off counts.
    const double ref = std::max(1.0, obs.col(i).cwiseAbs().maxCoeff()) * std::sqrt(static_cast<double>(obs.rows()));
    if (norm <= 1e-12 * ref) {
      scale(i) = 0.0;
      ++constant;
    } else {
      scale(i) = 1.0 / norm;
    }
  }
  if (constant > 0) {
    warn("channel_correlation: " + std::to_string(constant) + " constant channel(s) in layer '" +
         layer_name + "'; their correlations are reported as 0");
  }

  CorrelationMatrix out;
  out.layer_name = layer_name;
  out.n_observations = obs.rows();
  out.values = scale.asDiagonal() * cov * scale.asDiagonal();
  for (Eigen::Index i = 0; i < c; ++i) {
    for (Eigen::Index j = i + 1; j < c; ++j) {
      const double v = std::clamp(0.5 * (out.values(i, j) + out.values(j, i)), -1.0, 1.0);
      out.values(i, j) = v;
      out.values(j, i) = v;
    }
    out.values(i, i) = 1.0;
  }
  return out;
}

CorrelationMatrix channel_correlation(const ActivationSample& sample) {
  const std::int64_t c = sample.channels();
  const std::int64_t n = sample.observations();
  if (c < 2) throw ValidationError("channel_correlation: need at least 2 channels");
  if (static_cast<std::int64_t>(sample.values.size()) != n * c) {
    throw ShapeError("channel_correlation: activation buffer does not match its shape");
  }
  Eigen::MatrixXd obs(n, c);
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = 0; j < c; ++j) obs(i, j) = sample.values[static_cast<std::size_t>(i * c + j)];
  }
  return channel_correlation(obs, sample.layer_name);
}

double redundancy_score(const CorrelationMatrix& matrix) {
  const Eigen::Index c = matrix.values.rows();
  if (c < 2) return 0.0;
  const double off = matrix.values.cwiseAbs().sum() - matrix.values.diagonal().cwiseAbs().sum();
  return off / static_cast<double>(c * (c - 1));
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::filesystem::path& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.9g", m(i, j));
      f << (j ? "," : "") << buf;
    }
    f << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace cgaug
