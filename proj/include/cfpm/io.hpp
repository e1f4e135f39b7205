#pragma once

#include "cfpm/config.hpp"
#include "cfpm/fpm.hpp"
#include "cfpm/image.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>

namespace cfpm::io {

/// Writes values clamped to [0,1] as an 8- or 16-bit grayscale PNG.
void write_png(const Image& img, const std::filesystem::path& path, int bit_depth = 16);
/// Writes an RGB PNG; the color image is expected to be display-ready (sRGB tag).
void write_png(const ColorImage& img, const std::filesystem::path& path, int bit_depth = 16);

/// Reads an 8/16-bit grayscale PNG normalized to [0,1]; color files are rejected.
Image read_png_gray(const std::filesystem::path& path);
/// Reads an 8/16-bit PNG as sRGB; gray files are replicated to three channels.
ColorImage read_png_color(const std::filesystem::path& path);

/// Uncompressed single-channel 32-bit float TIFF (little-endian, one strip).
void write_tiff(const Image& img, const std::filesystem::path& path);
Image read_tiff(const std::filesystem::path& path);

/// Dispatches on extension: .png (normalized gray) or .tif/.tiff (float).
Image read_gray(const std::filesystem::path& path);
void write_gray(const Image& img, const std::filesystem::path& path);

/// A capture stack loaded back from disk with the acquisition it came from.
struct StoredStack {
  fpm::CaptureStack stack;
  fpm::IlluminationPlan plan;
  fpm::FpmSystem system;
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  bool all_pass = false;
};

/// Writes frame_NNNN.{png,tif} plus manifest.json recording plan, optics, normalization and seed.
void save_stack(const std::filesystem::path& dir, const StoredStack& stored, FrameFormat format);
StoredStack load_stack(const std::filesystem::path& dir);

/// Writes pretty-printed JSON followed by a newline.
void write_json(const nlohmann::json& j, const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace cfpm::io
