#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace cgaug {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<Rgb> pixels;

  RgbImage() = default;
  RgbImage(int w, int h, Rgb fill = {255, 255, 255});

  Rgb& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  const Rgb& at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  void blit(const RgbImage& src, int x0, int y0);
};

// Blue-white-red for values in [lo, hi] (centre maps to white).
Rgb diverging_color(double v, double lo, double hi);
// Dark-to-bright sequential map for values in [lo, hi].
Rgb sequential_color(double v, double lo, double hi);

// Each matrix cell becomes a cell_px x cell_px block.
RgbImage render_heatmap(const Eigen::MatrixXd& m, double lo, double hi, int cell_px);

// Row-major rows x cols grid, row 0 drawn at the top. Low rows of a
// spectrogram (low mel bins) should be flipped by the caller if desired.
RgbImage render_grayscale(std::span<const float> values, int rows, int cols, int cell_px);

// Polyline plot of (x, y) points with axes; deterministic rasterization.
RgbImage render_line_plot(std::span<const std::pair<double, double>> points, int width, int height);

// A non-empty provenance string is stored as a tEXt chunk.
void write_png(const RgbImage& image, const std::filesystem::path& path, const std::string& provenance = {});

}  // namespace cgaug
