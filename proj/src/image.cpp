#include "cfpm/image.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace cfpm {

std::string to_string(ColorSpace space) {
  switch (space) {
    case ColorSpace::sRGB: return "sRGB";
    case ColorSpace::LinearFpmRgb: return "linear-FPM-RGB";
    case ColorSpace::Lab: return "Lab";
    case ColorSpace::XYZ: return "XYZ";
  }
  return "unknown";
}

ColorImage ColorImage::crop(Eigen::Index row, Eigen::Index col, Eigen::Index h,
                            Eigen::Index w) const {
  if (row < 0 || col < 0 || h <= 0 || w <= 0 || row + h > rows() || col + w > cols())
    throw std::invalid_argument("ColorImage::crop: window outside image");
  ColorImage out;
  out.space = space;
  for (std::size_t c = 0; c < 3; ++c) out.channels[c] = channels[c].block(row, col, h, w);
  return out;
}

namespace {

double cubic_weight(double t) {
  constexpr double a = -0.5;
  t = std::abs(t);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

struct Taps {
  std::array<Eigen::Index, 4> index;
  std::array<double, 4> weight;
};

std::vector<Taps> make_taps(Eigen::Index in, Eigen::Index out) {
  std::vector<Taps> taps(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (Eigen::Index i = 0; i < out; ++i) {
    const double x = static_cast<double>(i) * scale;
    const auto base = static_cast<Eigen::Index>(std::floor(x));
    Taps& t = taps[static_cast<std::size_t>(i)];
    for (int k = 0; k < 4; ++k) {
      const Eigen::Index j = base - 1 + k;
      t.index[k] = std::clamp<Eigen::Index>(j, 0, in - 1);
      t.weight[k] = cubic_weight(x - static_cast<double>(j));
    }
  }
  return taps;
}

}  // namespace

Image resize_bicubic(const Image& src, Eigen::Index rows, Eigen::Index cols) {
  if (src.size() == 0 || rows <= 0 || cols <= 0)
    throw std::invalid_argument("resize_bicubic: empty input or output");
  const auto row_taps = make_taps(src.rows(), rows);
  const auto col_taps = make_taps(src.cols(), cols);

  Image horiz(src.rows(), cols);
  for (Eigen::Index r = 0; r < src.rows(); ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Taps& t = col_taps[static_cast<std::size_t>(c)];
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) acc += t.weight[k] * src(r, t.index[k]);
      horiz(r, c) = acc;
    }

  Image out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Taps& t = row_taps[static_cast<std::size_t>(r)];
    out.row(r) = t.weight[0] * horiz.row(t.index[0]) + t.weight[1] * horiz.row(t.index[1]) +
                 t.weight[2] * horiz.row(t.index[2]) + t.weight[3] * horiz.row(t.index[3]);
  }
  return out;
}

ColorImage resize_bicubic(const ColorImage& src, Eigen::Index rows, Eigen::Index cols) {
  ColorImage out;
  out.space = src.space;
  for (std::size_t c = 0; c < 3; ++c) out.channels[c] = resize_bicubic(src.channels[c], rows, cols);
  return out;
}

double quantile(const Image& img, double q) {
  if (img.size() == 0) throw std::invalid_argument("quantile: empty image");
  std::vector<double> v(img.data(), img.data() + img.size());
  std::sort(v.begin(), v.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return v[lo] + frac * (v[hi] - v[lo]);
}

}  // namespace cfpm
