#include "cfpm/color_space.hpp"

#include "cfpm/error.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>

namespace cfpm::color {

const Eigen::Matrix3d& rgb_to_lms_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 0.3811, 0.5783, 0.0402,  //
                                    0.1967, 0.7244, 0.0782,                       //
                                    0.0241, 0.1228, 0.8444)
                                       .finished();
  return m;
}

const Eigen::Matrix3d& lms_to_rgb_matrix() {
  static const Eigen::Matrix3d m = rgb_to_lms_matrix().inverse();
  return m;
}

const Eigen::Matrix3d& log_lms_to_lab_matrix() {
  static const Eigen::Matrix3d m = [] {
    const Eigen::Vector3d scale(1.0 / std::sqrt(3.0), 1.0 / std::sqrt(6.0), 1.0 / std::sqrt(2.0));
    Eigen::Matrix3d axes;
    axes << 1, 1, 1,  //
        1, 1, -2,     //
        1, -1, 0;
    return Eigen::Matrix3d(scale.asDiagonal() * axes);
  }();
  return m;
}

const Eigen::Matrix3d& lab_to_log_lms_matrix() {
  static const Eigen::Matrix3d m = log_lms_to_lab_matrix().inverse();
  return m;
}

const Eigen::Matrix3d& cie_rgb_to_xyz_matrix() {
  static const Eigen::Matrix3d m = (Eigen::Matrix3d() << 2.7688, 1.7517, 1.1301,  //
                                    1.0000, 4.5906, 0.0601,                       //
                                    0.0, 0.0565, 5.5942)
                                       .finished();
  return m;
}

ColorImage srgb_to_lab(const ColorImage& img) {
  ColorImage out(img.rows(), img.cols(), ColorSpace::Lab);
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) out.set_pixel(r, c, srgb_to_lab(img.pixel(r, c)));
  return out;
}

ColorImage lab_to_srgb(const ColorImage& img, std::size_t* clipped) {
  ColorImage out(img.rows(), img.cols(), ColorSpace::sRGB);
  std::size_t moved = 0;
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      Eigen::Vector3d rgb = lab_to_linear_rgb(img.pixel(r, c));
      if (gamut_clip(rgb)) ++moved;
      out.set_pixel(r, c, rgb);
    }
  if (clipped) *clipped = moved;
  return out;
}

ColorImage gamut_clip(const ColorImage& img, std::size_t* clipped) {
  ColorImage out(img.rows(), img.cols(), ColorSpace::sRGB);
  std::size_t moved = 0;
  for (Eigen::Index r = 0; r < img.rows(); ++r)
    for (Eigen::Index c = 0; c < img.cols(); ++c) {
      Eigen::Vector3d rgb = img.pixel(r, c);
      if (gamut_clip(rgb)) ++moved;
      out.set_pixel(r, c, rgb);
    }
  if (clipped) *clipped = moved;
  return out;
}

Chromaticity chromaticity(const Eigen::Vector3d& xyz) {
  const double sum = xyz.sum();
  if (!(sum > 0.0) || !std::isfinite(sum))
    throw NumericalError("chromaticity: X+Y+Z must be positive");
  return {xyz[0] / sum, xyz[1] / sum, xyz[2] / sum};
}

void LedSpectrum::validate() const {
  if (!(center_nm >= 380.0 && center_nm <= 780.0))
    throw NumericalError("LedSpectrum: center wavelength outside [380, 780] nm");
  if (!(fwhm_nm > 0.0)) throw NumericalError("LedSpectrum: FWHM must be positive");
}

double LedSpectrum::operator()(double wavelength_nm) const {
  const double sigma = fwhm_nm / (2.0 * std::sqrt(2.0 * std::numbers::ln2));
  const double t = (wavelength_nm - center_nm) / sigma;
  return std::exp(-0.5 * t * t);
}

Eigen::Vector3d spectrum_to_xyz(const LedSpectrum& spectrum, const CmfTable& cmf) {
  spectrum.validate();
  if (cmf.samples.size() < 2 || !(cmf.step_nm > 0.0))
    throw NumericalError("spectrum_to_xyz: CMF table needs at least two samples");

  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  double power = 0.0;
  for (std::size_t i = 0; i + 1 < cmf.samples.size(); ++i) {
    const double s0 = spectrum(cmf.wavelength(i));
    const double s1 = spectrum(cmf.wavelength(i + 1));
    acc += 0.5 * cmf.step_nm * (s0 * cmf.samples[i] + s1 * cmf.samples[i + 1]);
    power += 0.5 * cmf.step_nm * (s0 + s1);
  }
  // Total line power is FWHM * sqrt(pi / (4 ln 2)); require a measurable share on the grid.
  const double total = spectrum.fwhm_nm * std::sqrt(std::numbers::pi / (4.0 * std::numbers::ln2));
  if (!(power > 1e-6 * total)) throw NumericalError("spectrum_to_xyz: spectrum lies outside the CMF grid");

  if (cmf.basis == CmfBasis::CieRgb) return cie_rgb_to_xyz_matrix() * acc;
  return acc;
}

Eigen::Matrix3d primaries_matrix(const Primaries& primaries) {
  Eigen::Matrix3d m;
  for (int c = 0; c < 3; ++c) m.col(c) = primaries[static_cast<std::size_t>(c)].vector();
  return m;
}

WhiteBalance white_balance_coeffs(const Primaries& primaries, const Eigen::Vector3d& white) {
  const Eigen::Matrix3d m = primaries_matrix(primaries);
  const Eigen::FullPivLU<Eigen::Matrix3d> lu(m);
  if (!lu.isInvertible()) throw NumericalError("white_balance_coeffs: primary matrix is singular");
  return {lu.solve(white)};
}

const Eigen::Matrix3d& srgb_to_xyz_matrix() {
  static const Eigen::Matrix3d m = [] {
    const WhiteBalance wb = white_balance_coeffs(kSrgbPrimaries, kD65);
    return Eigen::Matrix3d(primaries_matrix(kSrgbPrimaries) * wb.gamma.asDiagonal());
  }();
  return m;
}

const Eigen::Matrix3d& xyz_to_srgb_matrix() {
  static const Eigen::Matrix3d m = srgb_to_xyz_matrix().inverse();
  return m;
}

Eigen::Matrix3d fpm_to_xyz_matrix(const Primaries& primaries, const WhiteBalance& wb) {
  return primaries_matrix(primaries) * wb.gamma.asDiagonal();
}

}  // namespace cfpm::color
