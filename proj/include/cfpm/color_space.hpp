#pragma once

#include "cfpm/image.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace cfpm::color {

/// LMS values are clamped below by this before the base-10 log.
inline constexpr double kLogFloor = 1e-4;

/// RGB -> LMS cone response.
const Eigen::Matrix3d& rgb_to_lms_matrix();
const Eigen::Matrix3d& lms_to_rgb_matrix();
/// log10 LMS -> (L, a, b): diag(1/sqrt3, 1/sqrt6, 1/sqrt2) times the opponent-axis matrix.
const Eigen::Matrix3d& log_lms_to_lab_matrix();
const Eigen::Matrix3d& lab_to_log_lms_matrix();
/// CIE RGB tristimulus -> CIE XYZ.
const Eigen::Matrix3d& cie_rgb_to_xyz_matrix();

template <typename Derived>
Eigen::Vector3d srgb_to_lab(const Eigen::MatrixBase<Derived>& rgb) {
  Eigen::Vector3d lms = rgb_to_lms_matrix() * rgb.template cast<double>();
  for (int i = 0; i < 3; ++i) lms[i] = std::log10(std::max(lms[i], kLogFloor));
  return log_lms_to_lab_matrix() * lms;
}

/// Exact inverse of srgb_to_lab without any clipping.
template <typename Derived>
Eigen::Vector3d lab_to_linear_rgb(const Eigen::MatrixBase<Derived>& lab) {
  Eigen::Vector3d log_lms = lab_to_log_lms_matrix() * lab.template cast<double>();
  for (int i = 0; i < 3; ++i) log_lms[i] = std::pow(10.0, log_lms[i]);
  return lms_to_rgb_matrix() * log_lms;
}

/// Componentwise clamp to [0,1]. Returns true if any component moved.
inline bool gamut_clip(Eigen::Vector3d& rgb) {
  const Eigen::Vector3d clipped = rgb.cwiseMax(0.0).cwiseMin(1.0);
  const bool moved = (clipped.array() != rgb.array()).any();
  rgb = clipped;
  return moved;
}

ColorImage srgb_to_lab(const ColorImage& img);

/// Inverse of srgb_to_lab followed by gamut_clip; `clipped` receives the number of pixels moved.
ColorImage lab_to_srgb(const ColorImage& img, std::size_t* clipped = nullptr);

/// Clamps every channel to [0,1] and tags the result sRGB.
ColorImage gamut_clip(const ColorImage& img, std::size_t* clipped = nullptr);

struct Chromaticity {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vector() const { return {x, y, z}; }
};

/// Projection onto X + Y + Z = 1. Throws NumericalError when the sum is not positive.
Chromaticity chromaticity(const Eigen::Vector3d& xyz);

/// Gaussian emission line.
struct LedSpectrum {
  double center_nm = 550.0;
  double fwhm_nm = 20.0;

  void validate() const;
  double operator()(double wavelength_nm) const;
};

enum class CmfBasis { XYZ, CieRgb };

/// Color-matching functions sampled on a uniform wavelength grid.
struct CmfTable {
  double start_nm = 380.0;
  double step_nm = 5.0;
  std::vector<Eigen::Vector3d> samples;
  CmfBasis basis = CmfBasis::XYZ;

  double end_nm() const { return start_nm + step_nm * static_cast<double>(samples.size() - 1); }
  double wavelength(std::size_t i) const { return start_nm + step_nm * static_cast<double>(i); }

  /// CIE 1931 2-degree standard observer, 380-780 nm at 5 nm.
  static const CmfTable& cie1931();
};

/// Trapezoidal integral of spectrum times CMF. A CIE-RGB table is mapped to XYZ afterwards.
Eigen::Vector3d spectrum_to_xyz(const LedSpectrum& spectrum, const CmfTable& cmf);

struct WhiteBalance {
  Eigen::Vector3d gamma = Eigen::Vector3d::Ones();
};

using Primaries = std::array<Chromaticity, 3>;

/// Columns are the (x, y, z) chromaticities of the R, G, B primaries.
Eigen::Matrix3d primaries_matrix(const Primaries& primaries);

/// Solves primaries_matrix * gamma = white.
WhiteBalance white_balance_coeffs(const Primaries& primaries, const Eigen::Vector3d& white);

/// D65 reference white in XYZ.
inline const Eigen::Vector3d kD65{0.95047, 1.00000, 1.08883};

/// Measured chromaticities of the red, green and blue LEDs of the reference FPM setup.
inline const Primaries kFpmPrimaries{{{0.6625, 0.2901, 0.0474},
                                      {0.2410, 0.4521, 0.3069},
                                      {0.1719, 0.0608, 0.7663}}};

/// sRGB primary chromaticities.
inline const Primaries kSrgbPrimaries{{{0.64, 0.33, 0.03}, {0.30, 0.60, 0.10}, {0.15, 0.06, 0.79}}};

/// Linear sRGB -> XYZ: sRGB primaries scaled by their D65 white-balance diagonal.
const Eigen::Matrix3d& srgb_to_xyz_matrix();
/// XYZ -> linear sRGB (inverse of srgb_to_xyz_matrix).
const Eigen::Matrix3d& xyz_to_srgb_matrix();

/// Linear FPM channel values -> XYZ under the given primaries and white balance.
Eigen::Matrix3d fpm_to_xyz_matrix(const Primaries& primaries, const WhiteBalance& wb);

}  // namespace cfpm::color
