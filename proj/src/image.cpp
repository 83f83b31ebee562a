#include "cgaug/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cgaug/errors.hpp"

namespace cgaug {

RgbImage::RgbImage(int w, int h, Rgb fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

void RgbImage::blit(const RgbImage& src, int x0, int y0) {
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      const int tx = x0 + x;
      const int ty = y0 + y;
      if (tx >= 0 && ty >= 0 && tx < width && ty < height) at(tx, ty) = src.at(x, y);
    }
  }
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

double unit(double v, double lo, double hi) {
  if (!(hi > lo)) return 0.5;
  return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

void draw_line(RgbImage& img, int x0, int y0, int x1, int y1, Rgb c) {
  const int dx = std::abs(x1 - x0);
  const int dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1;
  const int sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    if (x0 >= 0 && y0 >= 0 && x0 < img.width && y0 < img.height) img.at(x0, y0) = c;
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

Rgb diverging_color(double v, double lo, double hi) {
  const double t = unit(v, lo, hi) * 2.0 - 1.0;
  if (t < 0) return {to_byte(1.0 + t), to_byte(1.0 + t), 255};
  return {255, to_byte(1.0 - t), to_byte(1.0 - t)};
}

Rgb sequential_color(double v, double lo, double hi) {
  // Piecewise-linear approximation of a perceptual dark-purple to yellow map.
  static constexpr double stops[5][3] = {
      {0.267, 0.005, 0.329}, {0.230, 0.322, 0.546}, {0.128, 0.567, 0.551},
      {0.369, 0.789, 0.383}, {0.993, 0.906, 0.144}};
  const double t = unit(v, lo, hi) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double f = t - i;
  return {to_byte(stops[i][0] + f * (stops[i + 1][0] - stops[i][0])),
          to_byte(stops[i][1] + f * (stops[i + 1][1] - stops[i][1])),
          to_byte(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))};
}

RgbImage render_heatmap(const Eigen::MatrixXd& m, double lo, double hi, int cell_px) {
  RgbImage img(static_cast<int>(m.cols()) * cell_px, static_cast<int>(m.rows()) * cell_px);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const Rgb c = diverging_color(m(i, j), lo, hi);
      for (int y = 0; y < cell_px; ++y) {
        for (int x = 0; x < cell_px; ++x) {
          img.at(static_cast<int>(j) * cell_px + x, static_cast<int>(i) * cell_px + y) = c;
        }
      }
    }
  }
  return img;
}

RgbImage render_grayscale(std::span<const float> values, int rows, int cols, int cell_px) {
  float lo = std::numeric_limits<float>::max();
  float hi = std::numeric_limits<float>::lowest();
  for (float v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  RgbImage img(cols * cell_px, rows * cell_px);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Rgb color = sequential_color(values[static_cast<std::size_t>(r) * cols + c], lo, hi);
      for (int y = 0; y < cell_px; ++y) {
        for (int x = 0; x < cell_px; ++x) img.at(c * cell_px + x, r * cell_px + y) = color;
      }
    }
  }
  return img;
}

RgbImage render_line_plot(std::span<const std::pair<double, double>> points, int width, int height) {
  RgbImage img(width, height);
  const int margin = 20;
  const Rgb axis{0, 0, 0};
  draw_line(img, margin, height - margin, width - margin, height - margin, axis);
  draw_line(img, margin, margin, margin, height - margin, axis);
  if (points.empty()) return img;
  double x_lo = points.front().first, x_hi = x_lo;
  double y_lo = points.front().second, y_hi = y_lo;
  for (const auto& [x, y] : points) {
    x_lo = std::min(x_lo, x);
    x_hi = std::max(x_hi, x);
    y_lo = std::min(y_lo, y);
    y_hi = std::max(y_hi, y);
  }
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (y_hi == y_lo) y_hi = y_lo + 1.0;
  auto px = [&](double x) {
    return margin + static_cast<int>(std::lround((x - x_lo) / (x_hi - x_lo) * (width - 2 * margin)));
  };
  auto py = [&](double y) {
    return height - margin -
           static_cast<int>(std::lround((y - y_lo) / (y_hi - y_lo) * (height - 2 * margin)));
  };
  const Rgb line{31, 119, 180};
  for (std::size_t i = 1; i < points.size(); ++i) {
    draw_line(img, px(points[i - 1].first), py(points[i - 1].second), px(points[i].first),
              py(points[i].second), line);
  }
  for (const auto& [x, y] : points) {
    for (int d = -2; d <= 2; ++d) {
      draw_line(img, px(x) - 2, py(y) + d, px(x) + 2, py(y) + d, line);
    }
  }
  return img;
}

void write_png(const RgbImage& image, const std::filesystem::path& path, const std::string& provenance) {
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot write image: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("PNG encoding failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height),
               8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::string key = "cgaug-config-hash";
  std::string text = provenance;
  png_text chunk{};
  if (!provenance.empty()) {
    chunk.compression = PNG_TEXT_COMPRESSION_NONE;
    chunk.key = key.data();
    chunk.text = text.data();
    png_set_text(png, info, &chunk, 1);
  }
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<std::size_t>(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const Rgb& c = image.at(x, y);
      row[3 * x] = c.r;
      row[3 * x + 1] = c.g;
      row[3 * x + 2] = c.b;
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace cgaug
