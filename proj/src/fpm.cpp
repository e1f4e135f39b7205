#include "cfpm/fpm.hpp"

#include "cfpm/error.hpp"
#include "cfpm/fft.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <tuple>

namespace cfpm::fpm {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct CropWindow {
  Eigen::Index top = 0;
  Eigen::Index left = 0;
};

// Top-left corner of the low-resolution window inside the high-resolution spectrum.
CropWindow crop_window(Eigen::Index hr_size, Eigen::Index lr_size, const Eigen::Vector2i& shift) {
  CropWindow w{hr_size / 2 - lr_size / 2 - shift[0], hr_size / 2 - lr_size / 2 - shift[1]};
  if (w.top < 0 || w.left < 0 || w.top + lr_size > hr_size || w.left + lr_size > hr_size)
    throw NumericalError("illumination shift pushes the pupil support off the spectrum grid");
  return w;
}

void check_spectrum(const ComplexField& spectrum, const Pupil& pupil) {
  if (spectrum.plane != Plane::Fourier) throw NumericalError("expected a Fourier-plane field");
  if (spectrum.rows() != spectrum.cols()) throw NumericalError("object spectrum must be square");
  if (pupil.size() == 0 || spectrum.rows() < pupil.size())
    throw NumericalError("object spectrum grid is smaller than the pupil grid");
}

}  // namespace

void LedGeometry::validate() const {
  if (rows <= 0 || cols <= 0 || rows % 2 == 0 || cols % 2 == 0)
    throw NumericalError("LedGeometry: rows and cols must be positive and odd");
  if (!(pitch_mm > 0.0)) throw NumericalError("LedGeometry: pitch must be positive");
  if (!(height_mm > 0.0)) throw NumericalError("LedGeometry: height must be positive");
}

double Illumination::magnitude() const { return std::hypot(kx, ky); }

IlluminationPlan led_wavevectors(const LedGeometry& geometry, double wavelength_um) {
  geometry.validate();
  if (!(wavelength_um > 0.0)) throw NumericalError("led_wavevectors: wavelength must be positive");

  IlluminationPlan plan;
  plan.wavelength_um = wavelength_um;
  const double k0 = kTwoPi / wavelength_um;
  const int mid_row = geometry.rows / 2;
  const int mid_col = geometry.cols / 2;
  for (int r = 0; r < geometry.rows; ++r)
    for (int c = 0; c < geometry.cols; ++c) {
      const double dx = (c - mid_col) * geometry.pitch_mm + geometry.offset_x_mm;
      const double dy = (r - mid_row) * geometry.pitch_mm + geometry.offset_y_mm;
      const double dist = std::sqrt(dx * dx + dy * dy + geometry.height_mm * geometry.height_mm);
      plan.entries.push_back({r, c, k0 * dx / dist, k0 * dy / dist});
    }
  std::stable_sort(plan.entries.begin(), plan.entries.end(),
                   [](const Illumination& a, const Illumination& b) {
                     const double ma = a.magnitude();
                     const double mb = b.magnitude();
                     if (ma != mb) return ma < mb;
                     return std::tie(a.row, a.col) < std::tie(b.row, b.col);
                   });
  return plan;
}

void OpticalGrid::validate() const {
  if (hr_size < 2 || ratio < 1 || hr_size % ratio != 0)
    throw NumericalError("OpticalGrid: hr_size must be a positive multiple of ratio");
  if (!(hr_pixel_um > 0.0)) throw NumericalError("OpticalGrid: pixel size must be positive");
}

double OpticalGrid::dk() const { return kTwoPi / (static_cast<double>(hr_size) * hr_pixel_um); }

Pupil make_pupil(double na, double wavelength_um, Eigen::Index size, double dk) {
  if (!(na > 0.0 && na < 1.0)) throw NumericalError("make_pupil: NA must lie in (0, 1)");
  if (!(wavelength_um > 0.0) || !(dk > 0.0) || size < 2)
    throw NumericalError("make_pupil: invalid wavelength or grid");
  Pupil p;
  p.na = na;
  p.dk = dk;
  p.cutoff = na * kTwoPi / wavelength_um;
  if (p.cutoff > static_cast<double>(size / 2) * dk)
    throw NumericalError("make_pupil: cutoff exceeds the grid Nyquist frequency");
  p.mask = Image::Zero(size, size);
  const double r2 = (p.cutoff / dk) * (p.cutoff / dk);
  for (Eigen::Index r = 0; r < size; ++r)
    for (Eigen::Index c = 0; c < size; ++c) {
      const double y = static_cast<double>(r - size / 2);
      const double x = static_cast<double>(c - size / 2);
      if (x * x + y * y <= r2) p.mask(r, c) = 1.0;
    }
  return p;
}

Pupil all_pass_pupil(Eigen::Index size, double dk) {
  Pupil p;
  p.mask = Image::Ones(size, size);
  p.dk = dk;
  p.cutoff = std::numeric_limits<double>::infinity();
  p.na = 1.0;
  return p;
}

Eigen::Vector2i spectrum_shift(const Illumination& led, double dk) {
  return {static_cast<int>(std::lround(led.ky / dk)), static_cast<int>(std::lround(led.kx / dk))};
}

ComplexImage pupil_subspectrum(const ComplexField& object_spectrum, const Pupil& pupil,
                               const Illumination& led) {
  check_spectrum(object_spectrum, pupil);
  const Eigen::Index n = object_spectrum.rows();
  const Eigen::Index m = pupil.size();
  const CropWindow w = crop_window(n, m, spectrum_shift(led, pupil.dk));
  const double scale = static_cast<double>(m) / static_cast<double>(n);
  return object_spectrum.data.block(w.top, w.left, m, m) * pupil.mask.cast<std::complex<double>>() *
         scale;
}

Image simulate_capture(const ComplexField& object_spectrum, const Pupil& pupil,
                       const Illumination& led) {
  return fft::inverse_centered(pupil_subspectrum(object_spectrum, pupil, led)).abs2();
}

CaptureStack simulate_stack(const ComplexField& object_spectrum, const IlluminationPlan& plan,
                            const Pupil& pupil, const NoiseModel& noise) {
  if (plan.size() == 0) throw NumericalError("simulate_stack: empty illumination plan");
  if (noise.sigma < 0.0) throw NumericalError("simulate_stack: negative noise sigma");

  CaptureStack stack;
  stack.frames.reserve(plan.size());
  double peak = 0.0;
  for (const auto& led : plan.entries) {
    stack.frames.push_back(simulate_capture(object_spectrum, pupil, led));
    peak = std::max(peak, stack.frames.back().maxCoeff());
  }
  stack.scale = peak > 0.0 ? peak : 1.0;
  for (auto& f : stack.frames) f /= stack.scale;

  if (noise.sigma > 0.0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.sigma);
    for (auto& f : stack.frames)
      for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = std::max(0.0, f.data()[i] + gauss(rng));
  }
  return stack;
}

IlluminationPlan FpmSystem::plan() const { return led_wavevectors(geometry, wavelength_um); }

Pupil FpmSystem::pupil() const {
  grid.validate();
  return make_pupil(na, wavelength_um, grid.lr_size(), grid.dk());
}

CaptureStack simulate_stack(const ComplexField& object_spectrum, const FpmSystem& system,
                            const NoiseModel& noise) {
  return simulate_stack(object_spectrum, system.plan(), system.pupil(), noise);
}

double disk_overlap_fraction(double distance, double radius) {
  if (!(radius > 0.0)) throw NumericalError("disk_overlap_fraction: radius must be positive");
  if (std::isinf(radius)) return 1.0;
  const double d = std::abs(distance);
  if (d >= 2.0 * radius) return 0.0;
  const double lens = 2.0 * radius * radius * std::acos(d / (2.0 * radius)) -
                      0.5 * d * std::sqrt(4.0 * radius * radius - d * d);
  return lens / (std::numbers::pi * radius * radius);
}

double overlap_ratio(const IlluminationPlan& plan, const Pupil& pupil) {
  if (plan.size() < 2) throw NumericalError("overlap_ratio: need at least two plan entries");
  // Step measured from the innermost illumination to its nearest neighbour.
  double step = std::numeric_limits<double>::infinity();
  for (std::size_t j = 1; j < plan.size(); ++j) {
    const double d = std::hypot(plan[0].kx - plan[j].kx, plan[0].ky - plan[j].ky);
    if (d > 0.0) step = std::min(step, d);
  }
  if (!std::isfinite(step)) throw NumericalError("overlap_ratio: all plan entries coincide");
  return disk_overlap_fraction(step, pupil.cutoff);
}

Image synthetic_support(const IlluminationPlan& plan, const Pupil& pupil, const OpticalGrid& grid) {
  const Eigen::Index n = grid.hr_size;
  const Eigen::Index m = pupil.size();
  Image support = Image::Zero(n, n);
  for (const auto& led : plan.entries) {
    const CropWindow w = crop_window(n, m, spectrum_shift(led, pupil.dk));
    support.block(w.top, w.left, m, m) = support.block(w.top, w.left, m, m).max(pupil.mask);
  }
  return support;
}

namespace {

void check_stack(const CaptureStack& stack, const IlluminationPlan& plan, const Pupil& pupil,
                 const OpticalGrid& grid) {
  grid.validate();
  if (stack.size() == 0 || stack.size() != plan.size())
    throw NumericalError("reconstruct: stack and plan lengths differ");
  if (pupil.size() != grid.lr_size()) throw NumericalError("reconstruct: pupil does not match the grid");
  for (const auto& f : stack.frames)
    if (f.rows() != grid.lr_size() || f.cols() != grid.lr_size())
      throw NumericalError("reconstruct: frame size does not match the grid");
}

}  // namespace

ComplexImage initial_spectrum(const CaptureStack& stack, const IlluminationPlan& plan,
                              const Pupil& pupil, const OpticalGrid& grid) {
  check_stack(stack, plan, pupil, grid);
  const Image amplitude = stack.intensity(0).max(0.0).sqrt();
  const Image upsampled = resize_bicubic(amplitude, grid.hr_size, grid.hr_size);
  ComplexImage spectrum = fft::forward_centered(upsampled.cast<std::complex<double>>());
  spectrum *= synthetic_support(plan, pupil, grid).cast<std::complex<double>>();
  return spectrum;
}

double data_residual(const ComplexImage& hr_spectrum, const CaptureStack& stack,
                     const IlluminationPlan& plan, const Pupil& pupil, const OpticalGrid& grid) {
  check_stack(stack, plan, pupil, grid);
  const ComplexField spectrum{hr_spectrum, Plane::Fourier, grid.dk()};
  double total = 0.0;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    const Image model = fft::inverse_centered(pupil_subspectrum(spectrum, pupil, plan[i])).abs();
    total += (stack.intensity(i).max(0.0).sqrt() - model).square().sum();
  }
  return total;
}

Reconstruction reconstruct(const CaptureStack& stack, const IlluminationPlan& plan, const Pupil& pupil,
                           const OpticalGrid& grid, const ReconstructionOptions& options) {
  if (options.iterations < 0) throw NumericalError("reconstruct: iterations must be non-negative");
  check_stack(stack, plan, pupil, grid);

  Reconstruction out;
  if (plan.size() >= 2) {
    out.overlap = overlap_ratio(plan, pupil);
    out.low_overlap = out.overlap < 0.35;
    if (out.overlap <= 0.0) throw NumericalError("reconstruct: adjacent pupils do not overlap");
  } else {
    out.overlap = 1.0;
  }

  const Eigen::Index n = grid.hr_size;
  const Eigen::Index m = grid.lr_size();
  const double scale = static_cast<double>(m) / static_cast<double>(n);
  const ComplexImage mask = pupil.mask.cast<std::complex<double>>();
  const ComplexImage keep = (1.0 - pupil.mask).cast<std::complex<double>>();

  std::vector<CropWindow> windows;
  std::vector<Image> measured;
  for (std::size_t i = 0; i < plan.size(); ++i) {
    windows.push_back(crop_window(n, m, spectrum_shift(plan[i], pupil.dk)));
    measured.push_back(stack.intensity(i).max(0.0).sqrt());
  }

  ComplexImage spectrum = initial_spectrum(stack, plan, pupil, grid);
  if (options.track_residual) out.residual.push_back(data_residual(spectrum, stack, plan, pupil, grid));

  for (int it = 0; it < options.iterations; ++it) {
    for (std::size_t i = 0; i < plan.size(); ++i) {
      const CropWindow& w = windows[i];
      auto block = spectrum.block(w.top, w.left, m, m);
      ComplexImage low = fft::inverse_centered(ComplexImage(block * mask * scale));
      for (Eigen::Index p = 0; p < low.size(); ++p) {
        const double mag = std::abs(low.data()[p]);
        const double target = measured[i].data()[p];
        low.data()[p] = mag > 0.0 ? low.data()[p] * (target / mag) : std::complex<double>(target, 0.0);
      }
      const ComplexImage updated = fft::forward_centered(low) / scale;
      block = block * keep + updated * mask;
    }
    if (options.track_residual) out.residual.push_back(data_residual(spectrum, stack, plan, pupil, grid));
  }

  out.field = ComplexField{fft::inverse_centered(spectrum), Plane::Sample,
                           grid.hr_pixel_um};
  return out;
}

}  // namespace cfpm::fpm
