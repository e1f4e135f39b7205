#pragma once

#include "cfpm/color_transfer.hpp"
#include "cfpm/fpm.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace cfpm {

enum class ChannelPolicy { Best, Red, Green, Blue };
enum class PhantomPreset { HematoxylinEosin, SingleDye };
enum class FrameFormat { Png16, Tiff32 };

/// Full experiment configuration. Defaults mirror the reference hardware:
/// 15x15 LEDs at 4 mm pitch, 70 mm above the sample, 4x/0.1 NA objective,
/// 6.5 µm camera pixels and 630.1 / 515.0 / 462.6 nm illumination.
struct RunConfig {
  fpm::LedGeometry geometry;
  double na = 0.1;
  std::array<double, 3> wavelengths_um{0.6301, 0.5150, 0.4626};
  int hr_size = 256;
  int lr_size = 64;
  int upsample = 4;
  double hr_pixel_um = 0.40625;
  int iterations = 10;
  double noise_sigma = 0.0;
  std::vector<std::uint64_t> seeds = default_seeds();
  ChannelPolicy channel_policy = ChannelPolicy::Best;
  std::string output_dir = "out";
  int neighborhood = 5;
  transfer::Dispersion dispersion = transfer::Dispersion::StdDev;
  int donor_stride = 1;
  PhantomPreset phantom_preset = PhantomPreset::HematoxylinEosin;
  FrameFormat frame_format = FrameFormat::Png16;
  /// Side of the small-FOV donor tile as a fraction of the field.
  double tile_fraction = 0.4;
  int jobs = 1;
  /// Wall-clock timings make the metrics non-reproducible, so they are opt-in.
  bool record_timing = false;
  /// Single on-axis frame, all-pass pupil and no downsampling: the sanity ceiling of the pipeline.
  bool perfect_optics = false;

  static std::vector<std::uint64_t> default_seeds();

  /// Throws ConfigError when a value violates a module precondition.
  void validate() const;

  fpm::OpticalGrid grid() const;
  /// Geometry, NA, wavelength and grid for channel 0 (red), 1 (green) or 2 (blue).
  fpm::FpmSystem system(std::size_t channel) const;
  transfer::TransferOptions transfer_options() const;

  bool operator==(const RunConfig&) const = default;
};

void to_json(nlohmann::json& j, const RunConfig& config);
/// Missing keys keep their defaults; unknown keys are rejected.
void from_json(const nlohmann::json& j, RunConfig& config);

RunConfig load_config(const std::filesystem::path& path);
void save_config(const RunConfig& config, const std::filesystem::path& path);

std::string to_string(ChannelPolicy policy);
std::string channel_name(std::size_t channel);

}  // namespace cfpm
