#include "cfpm/color_transfer.hpp"

#include "cfpm/color_space.hpp"
#include "cfpm/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cfpm::transfer {

PixelStats neighborhood_stats(const Image& lightness, const StatsOptions& options) {
  if (lightness.size() == 0) throw NumericalError("neighborhood_stats: empty image");
  if (options.window < 1 || options.window % 2 == 0)
    throw NumericalError("neighborhood_stats: window must be odd and positive");

  const Eigen::Index rows = lightness.rows();
  const Eigen::Index cols = lightness.cols();
  const Eigen::Index half = options.window / 2;
  const double count = static_cast<double>(options.window) * options.window;

  PixelStats s;
  s.brightness = lightness;
  s.dispersion.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      // Deviations from the center value keep flat windows exactly zero.
      const double center = lightness(r, c);
      const auto at = [&](Eigen::Index dr, Eigen::Index dc) {
        return lightness(std::clamp<Eigen::Index>(r + dr, 0, rows - 1),
                         std::clamp<Eigen::Index>(c + dc, 0, cols - 1)) -
               center;
      };
      double sum = 0.0;
      for (Eigen::Index dr = -half; dr <= half; ++dr)
        for (Eigen::Index dc = -half; dc <= half; ++dc) sum += at(dr, dc);
      const double mean = sum / count;
      double sq = 0.0;
      for (Eigen::Index dr = -half; dr <= half; ++dr)
        for (Eigen::Index dc = -half; dc <= half; ++dc) {
          const double d = at(dr, dc) - mean;
          sq += d * d;
        }
      const double variance = sq / count;
      s.dispersion(r, c) = options.dispersion == Dispersion::StdDev ? std::sqrt(variance) : variance;
    }
  s.score = 0.5 * s.brightness + 0.5 * s.dispersion;
  return s;
}

Image histogram_match(const Image& acceptor, const Image& donor) {
  if (acceptor.size() == 0 || donor.size() == 0) throw NumericalError("histogram_match: empty input");

  std::vector<double> sorted_donor(donor.data(), donor.data() + donor.size());
  std::sort(sorted_donor.begin(), sorted_donor.end());
  const auto donor_quantile = [&](double p) {
    const double pos = p * static_cast<double>(sorted_donor.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted_donor.size() - 1);
    return sorted_donor[lo] + (pos - static_cast<double>(lo)) * (sorted_donor[hi] - sorted_donor[lo]);
  };

  const auto n = static_cast<std::size_t>(acceptor.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return acceptor.data()[a] < acceptor.data()[b]; });

  Image out(acceptor.rows(), acceptor.cols());
  std::size_t begin = 0;
  while (begin < n) {
    std::size_t end = begin + 1;
    while (end < n && acceptor.data()[order[end]] == acceptor.data()[order[begin]]) ++end;
    const double mean_rank = 0.5 * static_cast<double>(begin + end - 1);
    const double p = n > 1 ? mean_rank / static_cast<double>(n - 1) : 0.5;
    const double value = donor_quantile(p);
    for (std::size_t k = begin; k < end; ++k) out.data()[order[k]] = value;
    begin = end;
  }
  return out;
}

DonorIndex::DonorIndex(const Image& donor_score, int stride) {
  if (donor_score.size() == 0) throw NumericalError("DonorIndex: empty donor");
  if (stride < 1) throw NumericalError("DonorIndex: stride must be positive");

  std::vector<std::pair<double, Eigen::Index>> items;
  for (Eigen::Index i = 0; i < donor_score.size(); i += stride) items.emplace_back(donor_score.data()[i], i);
  std::sort(items.begin(), items.end());

  scores_.reserve(items.size());
  indices_.reserve(items.size());
  for (const auto& [score, index] : items) {
    scores_.push_back(score);
    indices_.push_back(index);
  }

  const std::size_t n = scores_.size();
  run_begin_.resize(n);
  run_end_.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    run_begin_[i] = (i > 0 && scores_[i] == scores_[i - 1]) ? run_begin_[i - 1] : i;
  for (std::size_t i = n; i-- > 0;)
    run_end_[i] = (i + 1 < n && scores_[i] == scores_[i + 1]) ? run_end_[i + 1] : i + 1;
}

Eigen::Index DonorIndex::nearest(double score) const {
  const std::size_t n = scores_.size();
  const auto pos = static_cast<std::size_t>(std::lower_bound(scores_.begin(), scores_.end(), score) -
                                            scores_.begin());
  const auto distance = [&](std::size_t i) { return std::abs(score - scores_[i]); };

  double best = std::numeric_limits<double>::infinity();
  if (pos < n) best = distance(pos);
  if (pos > 0) best = std::min(best, distance(pos - 1));

  // Rounded distances can tie across distinct scores, so walk whole runs on both sides.
  Eigen::Index chosen = std::numeric_limits<Eigen::Index>::max();
  for (std::size_t i = pos; i < n && distance(i) == best; i = run_end_[i])
    chosen = std::min(chosen, indices_[run_begin_[i]]);
  for (std::size_t i = pos; i > 0 && distance(i - 1) == best;) {
    const std::size_t first = run_begin_[i - 1];
    chosen = std::min(chosen, indices_[first]);
    i = first;
  }
  return chosen;
}

Assignment match(const DonorIndex& index, const Image& acceptor_score) {
  Assignment out(acceptor_score.rows(), acceptor_score.cols());
  for (Eigen::Index i = 0; i < acceptor_score.size(); ++i)
    out.data()[i] = index.nearest(acceptor_score.data()[i]);
  return out;
}

ColorImage transfer(const ColorImage& donor_lab, const Image& acceptor_lightness,
                    const TransferOptions& options) {
  if (donor_lab.empty()) throw NumericalError("transfer: empty donor");
  if (acceptor_lightness.size() == 0) throw NumericalError("transfer: empty acceptor");
  if (donor_lab.space != ColorSpace::Lab) throw NumericalError("transfer: donor must be tagged Lab");

  const PixelStats donor_stats = neighborhood_stats(donor_lab[0], options.stats);
  const PixelStats acceptor_stats = neighborhood_stats(acceptor_lightness, options.stats);
  const DonorIndex index(donor_stats.score, options.donor_stride);
  const Assignment chosen = match(index, acceptor_stats.score);

  ColorImage out;
  out.space = ColorSpace::Lab;
  out[0] = acceptor_lightness;
  out[1].resize(acceptor_lightness.rows(), acceptor_lightness.cols());
  out[2].resize(acceptor_lightness.rows(), acceptor_lightness.cols());
  for (Eigen::Index i = 0; i < chosen.size(); ++i) {
    out[1].data()[i] = donor_lab[1].data()[chosen.data()[i]];
    out[2].data()[i] = donor_lab[2].data()[chosen.data()[i]];
  }
  return out;
}

Image amplitude_to_lightness(const Image& amplitude, double lo, double hi) {
  if (amplitude.size() == 0) throw NumericalError("amplitude_to_lightness: empty image");
  const double p_lo = quantile(amplitude, 0.001);
  const double p_hi = quantile(amplitude, 0.999);
  if (!(p_hi > p_lo)) return Image::Constant(amplitude.rows(), amplitude.cols(), 0.5 * (lo + hi));
  const Image t = ((amplitude - p_lo) / (p_hi - p_lo)).max(0.0).min(1.0);
  return lo + t * (hi - lo);
}

namespace {

ColorImage to_lab(const ColorImage& donor) {
  switch (donor.space) {
    case ColorSpace::Lab: return donor;
    case ColorSpace::sRGB: return color::srgb_to_lab(color::gamut_clip(donor));
    default: throw NumericalError("colorize: donor must be tagged sRGB or Lab");
  }
}

ColorizeResult colorize_from_lab(const ColorImage& donor_lab, const Image& acceptor_amplitude,
                                 const TransferOptions& options) {
  const Image& donor_l = donor_lab[0];
  const Image lightness = amplitude_to_lightness(acceptor_amplitude, donor_l.minCoeff(), donor_l.maxCoeff());

  ColorizeResult result;
  result.matched_lightness = histogram_match(lightness, donor_l);
  result.lab = transfer(donor_lab, result.matched_lightness, options);
  result.srgb = color::lab_to_srgb(result.lab, &result.clipped);
  return result;
}

}  // namespace

ColorizeResult cfpm_colorize(const ColorImage& donor, const Image& acceptor_amplitude,
                             const TransferOptions& options) {
  if (donor.empty() || acceptor_amplitude.size() == 0) throw NumericalError("cfpm_colorize: empty input");
  if (donor.rows() * acceptor_amplitude.cols() != donor.cols() * acceptor_amplitude.rows())
    throw NumericalError("cfpm_colorize: donor and acceptor fields of view differ in aspect");
  if (donor.rows() > acceptor_amplitude.rows())
    throw NumericalError("cfpm_colorize: donor resolution exceeds acceptor resolution");

  const ColorImage upsampled =
      donor.rows() == acceptor_amplitude.rows()
          ? donor
          : resize_bicubic(donor, acceptor_amplitude.rows(), acceptor_amplitude.cols());
  return colorize_from_lab(to_lab(upsampled), acceptor_amplitude, options);
}

ColorizeResult transfer_from_tile(const ColorImage& donor_tile, const Image& acceptor_amplitude,
                                  const TransferOptions& options) {
  if (donor_tile.empty() || acceptor_amplitude.size() == 0)
    throw NumericalError("transfer_from_tile: empty input");
  return colorize_from_lab(to_lab(donor_tile), acceptor_amplitude, options);
}

}  // namespace cfpm::transfer
