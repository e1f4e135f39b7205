#pragma once

#include "cfpm/image.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace cfpm::fpm {

/// Planar LED array below the sample. Rows and cols are odd so a center LED exists.
struct LedGeometry {
  int rows = 15;
  int cols = 15;
  double pitch_mm = 4.0;
  double height_mm = 70.0;
  double offset_x_mm = 0.0;
  double offset_y_mm = 0.0;

  void validate() const;
  bool operator==(const LedGeometry&) const = default;
};

/// One LED of the scan: array position and the transverse wavevector of its plane wave.
struct Illumination {
  int row = 0;
  int col = 0;
  double kx = 0.0;  // rad/µm, along columns
  double ky = 0.0;  // rad/µm, along rows

  double magnitude() const;
};

/// Scan order, sorted by |k| ascending with (row, col) tie-break; entry 0 is the on-axis LED.
struct IlluminationPlan {
  std::vector<Illumination> entries;
  double wavelength_um = 0.5;

  std::size_t size() const { return entries.size(); }
  const Illumination& operator[](std::size_t i) const { return entries[i]; }
};

IlluminationPlan led_wavevectors(const LedGeometry& geometry, double wavelength_um);

/// Sampling shared by the simulator and the reconstructor.
///
/// The high-resolution grid is hr_size x hr_size at hr_pixel_um; low-resolution
/// frames are hr_size / ratio pixels wide and sample the central crop of the spectrum.
struct OpticalGrid {
  Eigen::Index hr_size = 256;
  int ratio = 4;
  double hr_pixel_um = 0.40625;

  void validate() const;
  Eigen::Index lr_size() const { return hr_size / ratio; }
  /// Spectral sampling in rad/µm.
  double dk() const;
  bool operator==(const OpticalGrid&) const = default;
};

/// Binary objective pupil on the low-resolution spectrum grid (DC at the center pixel).
struct Pupil {
  Image mask;
  double na = 0.0;
  double cutoff = 0.0;  // rad/µm
  double dk = 0.0;      // rad/µm per pixel

  Eigen::Index size() const { return mask.rows(); }
};

/// Disk of radius NA * 2pi / wavelength. Throws when the disk does not fit the grid.
Pupil make_pupil(double na, double wavelength_um, Eigen::Index size, double dk);

/// Pupil passing every sample of the grid.
Pupil all_pass_pupil(Eigen::Index size, double dk);

/// Integer spectrum shift (rows, cols) for an illumination, k rounded to the nearest sample.
Eigen::Vector2i spectrum_shift(const Illumination& led, double dk);

/// Object spectrum sampled at k - k_i inside the pupil, scaled so a unit plane wave has unit amplitude.
ComplexImage pupil_subspectrum(const ComplexField& object_spectrum, const Pupil& pupil,
                               const Illumination& led);

/// Low-resolution intensity |F^-1[O(k - k_i) P(k)]|^2.
Image simulate_capture(const ComplexField& object_spectrum, const Pupil& pupil,
                       const Illumination& led);

/// Intensity frames aligned with an IlluminationPlan. Physical intensity = frame * scale.
struct CaptureStack {
  std::vector<Image> frames;
  double scale = 1.0;

  std::size_t size() const { return frames.size(); }
  Image intensity(std::size_t i) const { return frames[i] * scale; }
};

struct NoiseModel {
  double sigma = 0.0;  // standard deviation in normalized frame units
  std::uint64_t seed = 0;
};

/// One frame per plan entry, exposure-normalized by the stack maximum, optional clipped Gaussian noise.
CaptureStack simulate_stack(const ComplexField& object_spectrum, const IlluminationPlan& plan,
                            const Pupil& pupil, const NoiseModel& noise = {});

/// Everything needed to image one wavelength.
struct FpmSystem {
  LedGeometry geometry;
  double na = 0.1;
  double wavelength_um = 0.515;
  OpticalGrid grid;

  IlluminationPlan plan() const;
  Pupil pupil() const;
};

CaptureStack simulate_stack(const ComplexField& object_spectrum, const FpmSystem& system,
                            const NoiseModel& noise = {});

/// Fractional area shared by two disks of equal radius whose centers are `distance` apart.
double disk_overlap_fraction(double distance, double radius);

/// Overlap of the innermost pupil with its nearest neighbour in the plan.
double overlap_ratio(const IlluminationPlan& plan, const Pupil& pupil);

/// Union of the pupil disks shifted to every plan entry, on the high-resolution spectrum grid.
Image synthetic_support(const IlluminationPlan& plan, const Pupil& pupil, const OpticalGrid& grid);

struct ReconstructionOptions {
  int iterations = 10;
  /// Record the data residual before the first and after every iteration.
  bool track_residual = false;
};

struct Reconstruction {
  ComplexField field;             // high-resolution sample-plane estimate
  std::vector<double> residual;   // sum_i || sqrt(I_i) - |model_i| ||^2, when tracked
  double overlap = 0.0;
  bool low_overlap = false;       // overlap below 0.35
};

/// Centered high-resolution spectrum of the bicubic-upsampled on-axis amplitude (zero phase),
/// restricted to the synthetic support.
ComplexImage initial_spectrum(const CaptureStack& stack, const IlluminationPlan& plan,
                              const Pupil& pupil, const OpticalGrid& grid);

/// Sum of squared amplitude misfits for a high-resolution spectrum estimate.
double data_residual(const ComplexImage& hr_spectrum, const CaptureStack& stack,
                     const IlluminationPlan& plan, const Pupil& pupil, const OpticalGrid& grid);

/// Alternating-projection spectrum stitching.
Reconstruction reconstruct(const CaptureStack& stack, const IlluminationPlan& plan, const Pupil& pupil,
                           const OpticalGrid& grid, const ReconstructionOptions& options = {});

}  // namespace cfpm::fpm
