#pragma once

#include <Eigen/Core>

#include <array>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfpm {

/// Single-channel row-major raster. Units depend on use (intensity, amplitude, Lab channel).
template <typename Scalar>
using Image2D = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Image = Image2D<double>;
using ComplexImage = Image2D<std::complex<double>>;

enum class ColorSpace { sRGB, LinearFpmRgb, Lab, XYZ };

std::string to_string(ColorSpace space);

/// Three equally sized planes tagged with the space they live in.
struct ColorImage {
  std::array<Image, 3> channels;
  ColorSpace space = ColorSpace::sRGB;

  ColorImage() = default;
  ColorImage(Eigen::Index rows, Eigen::Index cols, ColorSpace tag)
      : space(tag) {
    for (auto& c : channels) c = Image::Zero(rows, cols);
  }
  ColorImage(Image c1, Image c2, Image c3, ColorSpace tag)
      : channels{std::move(c1), std::move(c2), std::move(c3)}, space(tag) {
    if (channels[1].rows() != channels[0].rows() || channels[1].cols() != channels[0].cols() ||
        channels[2].rows() != channels[0].rows() || channels[2].cols() != channels[0].cols())
      throw std::invalid_argument("ColorImage: channel shapes differ");
  }

  Eigen::Index rows() const { return channels[0].rows(); }
  Eigen::Index cols() const { return channels[0].cols(); }
  bool empty() const { return channels[0].size() == 0; }

  Image& operator[](std::size_t i) { return channels[i]; }
  const Image& operator[](std::size_t i) const { return channels[i]; }

  Eigen::Vector3d pixel(Eigen::Index r, Eigen::Index c) const {
    return {channels[0](r, c), channels[1](r, c), channels[2](r, c)};
  }
  void set_pixel(Eigen::Index r, Eigen::Index c, const Eigen::Vector3d& v) {
    channels[0](r, c) = v[0];
    channels[1](r, c) = v[1];
    channels[2](r, c) = v[2];
  }

  /// Crop of all three channels.
  ColorImage crop(Eigen::Index row, Eigen::Index col, Eigen::Index h, Eigen::Index w) const;
};

enum class Plane { Sample, Fourier };

/// Complex raster for an optical field (sample plane) or its centered spectrum (Fourier plane).
struct ComplexField {
  ComplexImage data;
  Plane plane = Plane::Sample;
  /// Sample plane: pixel pitch in µm. Fourier plane: spectral sampling in rad/µm.
  double pixel_size = 1.0;

  Eigen::Index rows() const { return data.rows(); }
  Eigen::Index cols() const { return data.cols(); }
  Image amplitude() const { return data.abs(); }
  Image phase() const { return data.arg(); }
};

/// Keys bicubic (a = -0.5) resampling with replicate borders.
///
/// Sample-aligned: output pixel i maps to input coordinate i * in/out, the
/// registration produced by cropping a centered spectrum and inverting it.
Image resize_bicubic(const Image& src, Eigen::Index rows, Eigen::Index cols);
ColorImage resize_bicubic(const ColorImage& src, Eigen::Index rows, Eigen::Index cols);

/// Linear-interpolated quantile of the pixel values, q in [0,1].
double quantile(const Image& img, double q);

}  // namespace cfpm
