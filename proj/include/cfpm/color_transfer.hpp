#pragma once

#include "cfpm/image.hpp"

#include <cstddef>
#include <vector>

namespace cfpm::transfer {

/// How brightness dispersion over the neighborhood is measured.
enum class Dispersion { StdDev, Variance };

struct StatsOptions {
  int window = 5;  // odd side length of the square neighborhood
  Dispersion dispersion = Dispersion::StdDev;
};

/// Per-pixel brightness P, neighborhood dispersion D and matching score R = 0.5 P + 0.5 D.
struct PixelStats {
  Image brightness;
  Image dispersion;
  Image score;
};

/// Window statistics with replicate padding at the borders.
PixelStats neighborhood_stats(const Image& lightness, const StatsOptions& options = {});

/// Monotone CDF matching: each acceptor value becomes the donor quantile at its empirical CDF position.
/// Tied acceptor values share their mean rank.
Image histogram_match(const Image& acceptor, const Image& donor);

/// Donor pixels sorted by score for exact nearest-score lookup.
class DonorIndex {
 public:
  /// `stride` keeps every stride-th donor pixel in flat order (1 keeps all).
  explicit DonorIndex(const Image& donor_score, int stride = 1);

  /// Flat donor index minimizing |score - R_donor|; ties go to the smallest flat index.
  Eigen::Index nearest(double score) const;

  std::size_t size() const { return scores_.size(); }

 private:
  std::vector<double> scores_;         // ascending
  std::vector<Eigen::Index> indices_;  // flat donor index, ascending within equal scores
  std::vector<std::size_t> run_begin_;  // first position of the equal-score run
  std::vector<std::size_t> run_end_;    // one past the last position of the run
};

using Assignment = Eigen::Array<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Donor flat index chosen for every acceptor pixel.
Assignment match(const DonorIndex& index, const Image& acceptor_score);

struct TransferOptions {
  StatsOptions stats;
  int donor_stride = 1;
};

/// Output L is the acceptor lightness untouched; (a, b) comes from the donor pixel with the nearest score.
ColorImage transfer(const ColorImage& donor_lab, const Image& acceptor_lightness,
                    const TransferOptions& options = {});

/// Percentile-normalizes an amplitude image (0.1% / 99.9%) onto [lo, hi].
Image amplitude_to_lightness(const Image& amplitude, double lo, double hi);

struct ColorizeResult {
  ColorImage srgb;
  ColorImage lab;
  Image matched_lightness;
  std::size_t clipped = 0;
};

/// Colorizes a high-resolution amplitude image from a same-FOV low-resolution color donor.
/// The donor may be tagged sRGB or Lab.
ColorizeResult cfpm_colorize(const ColorImage& donor, const Image& acceptor_amplitude,
                             const TransferOptions& options = {});

/// Same pipeline with a donor that is not spatially registered to the acceptor (for example a
/// small high-resolution tile); only its statistics are used.
ColorizeResult transfer_from_tile(const ColorImage& donor_tile, const Image& acceptor_amplitude,
                                  const TransferOptions& options = {});

}  // namespace cfpm::transfer
