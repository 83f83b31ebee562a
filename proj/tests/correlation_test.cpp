#include "cgaug/correlation.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "cgaug/errors.hpp"
#include "cgaug/image.hpp"
#include "cgaug/log.hpp"
#include "support/signals.hpp"

using namespace cgaug;

namespace {

ActivationSample sample_from(const Eigen::MatrixXd& obs, std::int64_t b, std::int64_t h, std::int64_t w) {
  ActivationSample s;
  s.layer_name = "test";
  s.shape = {b, h, w, obs.cols()};
  for (Eigen::Index r = 0; r < obs.rows(); ++r)
    for (Eigen::Index c = 0; c < obs.cols(); ++c) s.values.push_back(static_cast<float>(obs(r, c)));
  return s;
}

Eigen::MatrixXd correlated(int n, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd base(n, c), mix(c, c);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < c; ++j) base(i, j) = g(rng);
  for (int i = 0; i < c; ++i)
    for (int j = 0; j < c; ++j) mix(i, j) = g(rng);
  return base * mix;
}

CorrelationMatrix from_values(const Eigen::MatrixXd& m) {
  CorrelationMatrix c;
  c.values = m;
  return c;
}

}  // namespace

TEST(Correlation, ScaledCopyIsOne) {
  Eigen::MatrixXd x(100, 2);
  std::mt19937 rng(1);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) x(i, 0) = g(rng), x(i, 1) = 2.0 * x(i, 0);
  EXPECT_NEAR(channel_correlation(x).values(0, 1), 1.0, 1e-12);
  x.col(1) = -x.col(0);
  EXPECT_NEAR(channel_correlation(x).values(0, 1), -1.0, 1e-12);
}

TEST(Correlation, IndependentChannelsNearZero) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(10000, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  const auto c = channel_correlation(sample_from(x, 4, 50, 50));
  EXPECT_EQ(c.n_observations, 10000);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) EXPECT_LT(std::abs(c.values(i, j)), 0.05);
}

TEST(Correlation, MatrixInvariants) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto c = channel_correlation(sample_from(correlated(512, 8, seed), 2, 16, 16));
    ASSERT_EQ(c.values.rows(), 8);
    for (int i = 0; i < 8; ++i) {
      EXPECT_NEAR(c.values(i, i), 1.0, 1e-8);
      for (int j = 0; j < 8; ++j) {
        EXPECT_NEAR(c.values(i, j), c.values(j, i), 1e-8);
        EXPECT_LE(std::abs(c.values(i, j)), 1.0);
      }
    }
  }
}

TEST(Correlation, AffineInvariance) {
  const auto x = correlated(400, 6, 9);
  Eigen::MatrixXd y = x;
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> scale(0.1, 10.0), shift(-5.0, 5.0);
  for (int c = 0; c < 6; ++c) y.col(c) = (x.col(c) * scale(rng)).array() + shift(rng);
  EXPECT_LT((channel_correlation(x).values - channel_correlation(y).values).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Correlation, ConstantChannelGivesZeroAndWarns) {
  std::vector<std::string> warnings;
  set_warning_sink([&](std::string_view w) { warnings.emplace_back(w); });
  auto x = correlated(64, 3, 5);
  x.col(1).setConstant(0.25);
  const auto c = channel_correlation(sample_from(x, 1, 8, 8));
  set_warning_sink(nullptr);
  EXPECT_EQ(c.values(0, 1), 0.0);
  EXPECT_EQ(c.values(2, 1), 0.0);
  EXPECT_EQ(c.values(1, 1), 1.0);
  EXPECT_TRUE(c.values.allFinite());
  EXPECT_EQ(warnings.size(), 1u);
}

TEST(Correlation, InvalidShapes) {
  EXPECT_THROW(channel_correlation(Eigen::MatrixXd::Ones(10, 1)), ValidationError);
  EXPECT_THROW(channel_correlation(Eigen::MatrixXd::Ones(1, 3)), ValidationError);
  auto s = sample_from(correlated(16, 2, 1), 1, 4, 4);
  s.values.pop_back();
  EXPECT_THROW(channel_correlation(s), ShapeError);
}

TEST(Redundancy, ClosedFormCases) {
  EXPECT_EQ(redundancy_score(from_values(Eigen::MatrixXd::Identity(5, 5))), 0.0);
  EXPECT_EQ(redundancy_score(from_values(Eigen::MatrixXd::Ones(5, 5))), 1.0);
  Eigen::MatrixXd m(3, 3);
  m << 1.0, 0.5, -0.5, 0.5, 1.0, 0.0, -0.5, 0.0, 1.0;
  EXPECT_NEAR(redundancy_score(from_values(m)), 1.0 / 3.0, 1e-15);
}

TEST(Redundancy, MonotoneInAbsoluteOffDiagonals) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(4, 4);
  double previous = 0.0;
  for (double v : {0.1, -0.3, 0.6, -0.9}) {
    m(0, 3) = m(3, 0) = v;
    const double r = redundancy_score(from_values(m));
    EXPECT_GT(r, previous);
    EXPECT_LE(r, 1.0);
    previous = r;
  }
}

TEST(Redundancy, CsvAndHeatmapOutput) {
  testing_support::TempDir dir("cgaug_corr");
  Eigen::MatrixXd m(2, 2);
  m << 1.0, -0.25, -0.25, 1.0;
  write_matrix_csv(m, dir / "m.csv");
  std::ifstream f(dir / "m.csv");
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line.substr(0, 2), "1,");
  const auto img = render_heatmap(m, -1.0, 1.0, 10);
  EXPECT_EQ(img.width, 20);
  EXPECT_EQ(img.height, 20);
  // Diagonal +1 is saturated red, -0.25 is light blue.
  EXPECT_GT(img.at(0, 0).r, img.at(0, 0).b);
  EXPECT_GT(img.at(15, 5).b, img.at(15, 5).r);
  write_png(img, dir / "m.png", "abc");
  std::ifstream png(dir / "m.png", std::ios::binary);
  char sig[8];
  png.read(sig, 8);
  EXPECT_EQ(std::string(sig + 1, 3), "PNG");
}
