#pragma once

#include "cfpm/color_space.hpp"
#include "cfpm/config.hpp"
#include "cfpm/fpm.hpp"
#include "cfpm/image.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace cfpm::harness {

/// Primaries and white balance used to turn three FPM channels into a displayable image.
struct Colorimetry {
  color::Primaries primaries = color::kFpmPrimaries;
  color::WhiteBalance white_balance = color::white_balance_coeffs(color::kFpmPrimaries, color::kD65);
};

/// Procedural stained slide.
///
/// Channel amplitudes come from Beer-Lambert absorption of two dyes at the three
/// illumination wavelengths; the sRGB ground truth is their conventional synthesis.
/// All three wavelengths share one smooth phase map.
struct Phantom {
  ColorImage ground_truth;  // sRGB
  ColorImage amplitudes;    // linear-FPM-RGB, one plane per illumination wavelength
  Image phase;              // radians in [0, pi/2]
  std::uint64_t seed = 0;
  PhantomPreset preset = PhantomPreset::HematoxylinEosin;

  /// Sample-plane complex transmission for channel 0 (red), 1 (green) or 2 (blue).
  ComplexField object(std::size_t channel, double pixel_um) const;
  /// Centered unitary spectrum of object(channel).
  ComplexField spectrum(std::size_t channel, double pixel_um) const;
};

Phantom generate_phantom(std::uint64_t seed, Eigen::Index size,
                         PhantomPreset preset = PhantomPreset::HematoxylinEosin,
                         const Colorimetry& colorimetry = {});

double rmse(const Image& f, const Image& g);

struct ColorRmse {
  double mean = 0.0;  // mean of the per-channel values
  std::array<double, 3> channel{};
};

ColorRmse rmse(const ColorImage& f, const ColorImage& g);

/// White-balanced FPM channels -> XYZ -> sRGB, gamut clipped.
ColorImage synthesize_rgb_conventional(const std::array<Image, 3>& amplitudes,
                                       const color::WhiteBalance& white_balance,
                                       const color::Primaries& primaries = color::kFpmPrimaries);

struct MetricsReport {
  std::string sample_id;
  std::string pipeline;
  std::optional<double> rmse;
  std::array<std::optional<double>, 3> rmse_channel;
  int frames = 0;
  std::optional<double> seconds;
  std::string channel;
  std::string status = "ok";

  bool operator==(const MetricsReport&) const = default;
};

void to_json(nlohmann::json& j, const MetricsReport& report);
void from_json(const nlohmann::json& j, MetricsReport& report);

/// "phantom-007" for seed 7.
std::string sample_id(std::uint64_t seed);

/// Simulated acquisition of one wavelength together with the optics that produced it.
struct ChannelCapture {
  fpm::IlluminationPlan plan;
  fpm::Pupil pupil;
  fpm::OpticalGrid grid;
  fpm::CaptureStack stack;
};

/// Simulates the stack for channel 0 (red), 1 (green) or 2 (blue) of a phantom.
/// With perfect_optics the stack is a single on-axis frame through an all-pass pupil at full resolution.
ChannelCapture capture_channel(const Phantom& phantom, std::size_t channel, std::uint64_t seed,
                               const RunConfig& config);

/// Images produced for one sample, kept for inspection.
struct SampleArtifacts {
  ColorImage ground_truth;
  ColorImage donor;         // low-resolution color composite of the on-axis frames
  ColorImage conventional;
  ColorImage cfpm;
  ColorImage tile;
  std::array<Image, 3> reconstructed_amplitude;
  std::size_t cfpm_channel = 1;
};

struct SampleResult {
  std::vector<MetricsReport> reports;
  SampleArtifacts artifacts;
};

/// Simulates and reconstructs one phantom, then scores every pipeline against its ground truth.
SampleResult run_sample(std::uint64_t seed, const RunConfig& config);

/// Runs every seed of the config (up to config.jobs at a time); reports are ordered by seed.
std::vector<MetricsReport> run_comparison(const RunConfig& config,
                                          std::vector<SampleArtifacts>* artifacts = nullptr);

/// Mean RMSE per pipeline over the reports that carry one.
std::map<std::string, double> mean_rmse(const std::vector<MetricsReport>& reports);

std::string to_csv(const std::vector<MetricsReport>& reports);

}  // namespace cfpm::harness
