#include "cfpm/harness.hpp"

#include "cfpm/color_transfer.hpp"
#include "cfpm/error.hpp"
#include "cfpm/fft.hpp"
#include "cfpm/fpm.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace cfpm::harness {

namespace {

// Separable Gaussian blur with periodic boundaries, so phantoms tile seamlessly under the FFT.
Image blur_periodic(const Image& src, double sigma) {
  if (sigma <= 0.0) return src;
  const auto radius = static_cast<Eigen::Index>(std::ceil(3.0 * sigma));
  Eigen::ArrayXd kernel(2 * radius + 1);
  for (Eigen::Index i = -radius; i <= radius; ++i)
    kernel[i + radius] = std::exp(-0.5 * static_cast<double>(i * i) / (sigma * sigma));
  kernel /= kernel.sum();

  const Eigen::Index rows = src.rows();
  const Eigen::Index cols = src.cols();
  const auto wrap = [](Eigen::Index i, Eigen::Index n) { return ((i % n) + n) % n; };

  Image tmp(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) acc += kernel[k + radius] * src(r, wrap(c + k, cols));
      tmp(r, c) = acc;
    }
  Image out(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) {
      double acc = 0.0;
      for (Eigen::Index k = -radius; k <= radius; ++k) acc += kernel[k + radius] * tmp(wrap(r + k, rows), c);
      out(r, c) = acc;
    }
  return out;
}

Image normalized(const Image& img) {
  const double lo = img.minCoeff();
  const double hi = img.maxCoeff();
  if (!(hi > lo)) return Image::Zero(img.rows(), img.cols());
  return (img - lo) / (hi - lo);
}

class PhantomBuilder {
 public:
  PhantomBuilder(std::uint64_t seed, Eigen::Index size) : rng_(seed), n_(size) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }

  Image smooth_noise(double sigma) {
    Image white(n_, n_);
    for (Eigen::Index i = 0; i < white.size(); ++i) white.data()[i] = uniform(0.0, 1.0);
    return normalized(blur_periodic(white, sigma));
  }

  // Soft-edged ellipses with chromatin texture.
  Image nuclei(int count) {
    Image out = Image::Zero(n_, n_);
    const Image chromatin = smooth_noise(1.2);
    for (int k = 0; k < count; ++k) {
      const double cy = uniform(0.0, static_cast<double>(n_));
      const double cx = uniform(0.0, static_cast<double>(n_));
      const double a = uniform(4.0, 9.0);
      const double b = a * uniform(0.6, 1.0);
      const double theta = uniform(0.0, std::numbers::pi);
      const double strength = uniform(0.7, 1.0);
      const double ct = std::cos(theta);
      const double st = std::sin(theta);
      const auto reach = static_cast<Eigen::Index>(std::ceil(a + 3.0));
      for (Eigen::Index dy = -reach; dy <= reach; ++dy)
        for (Eigen::Index dx = -reach; dx <= reach; ++dx) {
          const Eigen::Index r = wrap(static_cast<Eigen::Index>(std::floor(cy)) + dy);
          const Eigen::Index c = wrap(static_cast<Eigen::Index>(std::floor(cx)) + dx);
          const double y = std::floor(cy) + static_cast<double>(dy) + 0.5 - cy;
          const double x = std::floor(cx) + static_cast<double>(dx) + 0.5 - cx;
          const double u = (x * ct + y * st) / a;
          const double v = (-x * st + y * ct) / b;
          const double d = std::sqrt(u * u + v * v);
          const double edge = 1.0 / (1.0 + std::exp((d - 1.0) * a / 0.8));
          const double value = edge * strength * (0.7 + 0.3 * chromatin(r, c));
          out(r, c) = std::max(out(r, c), value);
        }
    }
    return out;
  }

  // Gently curving strokes with a Gaussian cross-section.
  Image fibers(int count) {
    Image out = Image::Zero(n_, n_);
    for (int k = 0; k < count; ++k) {
      double y = uniform(0.0, static_cast<double>(n_));
      double x = uniform(0.0, static_cast<double>(n_));
      double heading = uniform(0.0, 2.0 * std::numbers::pi);
      const int length = static_cast<int>(uniform(0.3, 0.7) * static_cast<double>(n_));
      const double width = uniform(1.0, 2.2);
      const double strength = uniform(0.5, 1.0);
      const auto reach = static_cast<Eigen::Index>(std::ceil(3.0 * width));
      for (int step = 0; step < length; ++step) {
        for (Eigen::Index dy = -reach; dy <= reach; ++dy)
          for (Eigen::Index dx = -reach; dx <= reach; ++dx) {
            const Eigen::Index r = wrap(static_cast<Eigen::Index>(std::floor(y)) + dy);
            const Eigen::Index c = wrap(static_cast<Eigen::Index>(std::floor(x)) + dx);
            const double ry = std::floor(y) + static_cast<double>(dy) + 0.5 - y;
            const double rx = std::floor(x) + static_cast<double>(dx) + 0.5 - x;
            const double value = strength * std::exp(-0.5 * (rx * rx + ry * ry) / (width * width));
            out(r, c) = std::max(out(r, c), value);
          }
        heading += uniform(-0.15, 0.15);
        y += std::sin(heading);
        x += std::cos(heading);
      }
    }
    return out;
  }

 private:
  Eigen::Index wrap(Eigen::Index i) const { return ((i % n_) + n_) % n_; }

  std::mt19937_64 rng_;
  Eigen::Index n_;
};

// Amplitude optical density per unit concentration at the red, green and blue wavelengths.
constexpr std::array<double, 3> kHematoxylin{1.5, 1.7, 0.7};
constexpr std::array<double, 3> kEosin{0.12, 1.1, 0.35};


double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

}  // namespace

ComplexField Phantom::object(std::size_t channel, double pixel_um) const {
  const Image& amp = amplitudes.channels.at(channel);
  ComplexImage field(amp.rows(), amp.cols());
  for (Eigen::Index i = 0; i < amp.size(); ++i) field.data()[i] = std::polar(amp.data()[i], phase.data()[i]);
  return {std::move(field), Plane::Sample, pixel_um};
}

ComplexField Phantom::spectrum(std::size_t channel, double pixel_um) const {
  const ComplexField field = object(channel, pixel_um);
  const double dk = 2.0 * std::numbers::pi / (static_cast<double>(field.rows()) * pixel_um);
  return {fft::forward_centered(field.data), Plane::Fourier, dk};
}

Phantom generate_phantom(std::uint64_t seed, Eigen::Index size, PhantomPreset preset,
                         const Colorimetry& colorimetry) {
  if (size < 64) throw NumericalError("generate_phantom: size must be at least 64");

  PhantomBuilder builder(seed, size);
  const double area = static_cast<double>(size * size);
  const Image tissue_noise = builder.smooth_noise(static_cast<double>(size) / 16.0);
  const Image tissue = ((tissue_noise - 0.3) / 0.15).max(0.0).min(1.0);
  const Image nuclei = builder.nuclei(static_cast<int>(std::lround(area / 900.0)));
  const Image strands = builder.fibers(static_cast<int>(std::lround(area / 1800.0)));
  const Image relief = builder.smooth_noise(static_cast<double>(size) / 20.0);

  const Image hema = blur_periodic(nuclei, 0.7);
  const Image eosin = blur_periodic(tissue * (0.25 + 0.75 * strands), 0.7);

  std::array<double, 3> second = kEosin;
  if (preset == PhantomPreset::SingleDye)
    for (std::size_t c = 0; c < 3; ++c) second[c] = 0.45 * kHematoxylin[c];

  Phantom p;
  p.seed = seed;
  p.preset = preset;
  p.amplitudes.space = ColorSpace::LinearFpmRgb;
  for (std::size_t c = 0; c < 3; ++c)
    p.amplitudes[c] = (-(hema * kHematoxylin[c] + eosin * second[c])).exp().min(1.0);

  const Image height = 0.6 * normalized(blur_periodic(hema + 0.5 * eosin, 1.5)) + 0.4 * relief;
  p.phase = normalized(height) * (0.5 * std::numbers::pi);

  p.ground_truth = synthesize_rgb_conventional(p.amplitudes.channels, colorimetry.white_balance,
                                               colorimetry.primaries);
  return p;
}

double rmse(const Image& f, const Image& g) {
  if (f.rows() != g.rows() || f.cols() != g.cols()) throw NumericalError("rmse: shape mismatch");
  if (f.size() == 0) throw NumericalError("rmse: empty images");
  return std::sqrt((f - g).square().sum() / static_cast<double>(f.size()));
}

ColorRmse rmse(const ColorImage& f, const ColorImage& g) {
  ColorRmse out;
  for (std::size_t c = 0; c < 3; ++c) out.channel[c] = rmse(f[c], g[c]);
  out.mean = (out.channel[0] + out.channel[1] + out.channel[2]) / 3.0;
  return out;
}

ColorImage synthesize_rgb_conventional(const std::array<Image, 3>& amplitudes,
                                       const color::WhiteBalance& white_balance,
                                       const color::Primaries& primaries) {
  for (std::size_t c = 1; c < 3; ++c)
    if (amplitudes[c].rows() != amplitudes[0].rows() || amplitudes[c].cols() != amplitudes[0].cols())
      throw NumericalError("synthesize_rgb_conventional: channel shapes differ");

  const Eigen::Matrix3d to_srgb =
      color::xyz_to_srgb_matrix() * color::fpm_to_xyz_matrix(primaries, white_balance);
  ColorImage out(amplitudes[0].rows(), amplitudes[0].cols(), ColorSpace::sRGB);
  for (std::size_t o = 0; o < 3; ++o)
    out[o] = (to_srgb(static_cast<Eigen::Index>(o), 0) * amplitudes[0] +
              to_srgb(static_cast<Eigen::Index>(o), 1) * amplitudes[1] +
              to_srgb(static_cast<Eigen::Index>(o), 2) * amplitudes[2])
                 .max(0.0)
                 .min(1.0);
  return out;
}

void to_json(nlohmann::json& j, const MetricsReport& r) {
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  j = nlohmann::json{{"sample_id", r.sample_id},
                     {"pipeline", r.pipeline},
                     {"rmse", opt(r.rmse)},
                     {"rmse_r", opt(r.rmse_channel[0])},
                     {"rmse_g", opt(r.rmse_channel[1])},
                     {"rmse_b", opt(r.rmse_channel[2])},
                     {"frames", r.frames},
                     {"seconds", opt(r.seconds)},
                     {"channel", r.channel},
                     {"status", r.status}};
}

void from_json(const nlohmann::json& j, MetricsReport& r) {
  const auto opt = [&](const char* key) -> std::optional<double> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
  };
  r.sample_id = j.at("sample_id").get<std::string>();
  r.pipeline = j.at("pipeline").get<std::string>();
  r.rmse = opt("rmse");
  r.rmse_channel = {opt("rmse_r"), opt("rmse_g"), opt("rmse_b")};
  r.frames = j.at("frames").get<int>();
  r.seconds = opt("seconds");
  r.channel = j.at("channel").get<std::string>();
  r.status = j.value("status", std::string("ok"));
}

std::string sample_id(std::uint64_t seed) {
  std::ostringstream os;
  os << "phantom-" << std::setw(3) << std::setfill('0') << seed;
  return os.str();
}

ChannelCapture capture_channel(const Phantom& phantom, std::size_t channel, std::uint64_t seed,
                               const RunConfig& config) {
  ChannelCapture cap;
  if (config.perfect_optics) {
    cap.grid = {config.hr_size, 1, config.hr_pixel_um};
    cap.pupil = fpm::all_pass_pupil(config.hr_size, cap.grid.dk());
    fpm::LedGeometry single = config.geometry;
    single.rows = single.cols = 1;
    cap.plan = fpm::led_wavevectors(single, config.wavelengths_um.at(channel));
  } else {
    const fpm::FpmSystem system = config.system(channel);
    cap.grid = system.grid;
    cap.plan = system.plan();
    cap.pupil = system.pupil();
  }
  const ComplexField spectrum = phantom.spectrum(channel, config.hr_pixel_um);
  const fpm::NoiseModel noise{config.noise_sigma, seed * 1000003ULL + channel};
  cap.stack = fpm::simulate_stack(spectrum, cap.plan, cap.pupil, noise);
  return cap;
}

namespace {

struct ChannelRun {
  ChannelCapture capture;
  Image amplitude;
  double seconds = 0.0;
};

ChannelRun run_channel(const Phantom& phantom, std::size_t channel, std::uint64_t seed,
                       const RunConfig& config) {
  ChannelRun run;
  run.capture = capture_channel(phantom, channel, seed, config);
  const auto& cap = run.capture;
  const auto start = std::chrono::steady_clock::now();
  const fpm::Reconstruction rec =
      fpm::reconstruct(cap.stack, cap.plan, cap.pupil, cap.grid, {config.iterations, false});
  run.amplitude = rec.field.amplitude();
  run.seconds = seconds_since(start);
  return run;
}

MetricsReport make_report(const std::string& sample, const std::string& pipeline, const ColorRmse& err,
                          int frames, double seconds, const std::string& channel, bool timing) {
  MetricsReport r;
  r.sample_id = sample;
  r.pipeline = pipeline;
  r.rmse = err.mean;
  r.rmse_channel = {err.channel[0], err.channel[1], err.channel[2]};
  r.frames = frames;
  if (timing) r.seconds = seconds;
  r.channel = channel;
  return r;
}

}  // namespace

SampleResult run_sample(std::uint64_t seed, const RunConfig& config) {
  config.validate();
  const Colorimetry colorimetry;
  const Phantom phantom = generate_phantom(seed, config.hr_size, config.phantom_preset, colorimetry);
  const std::string sample = sample_id(seed);
  const bool timing = config.record_timing;
  const transfer::TransferOptions options = config.transfer_options();

  std::array<ChannelRun, 3> runs;
  for (std::size_t c = 0; c < 3; ++c) runs[c] = run_channel(phantom, c, seed, config);

  SampleResult result;
  SampleArtifacts& art = result.artifacts;
  art.ground_truth = phantom.ground_truth;

  // Pipeline A: reconstruct every wavelength and synthesize.
  auto start = std::chrono::steady_clock::now();
  std::array<Image, 3> amplitudes;
  int conventional_frames = 0;
  double conventional_seconds = 0.0;
  for (std::size_t c = 0; c < 3; ++c) {
    amplitudes[c] = runs[c].amplitude;
    art.reconstructed_amplitude[c] = runs[c].amplitude;
    conventional_frames += static_cast<int>(runs[c].capture.plan.size());
    conventional_seconds += runs[c].seconds;
  }
  art.conventional = synthesize_rgb_conventional(amplitudes, colorimetry.white_balance, colorimetry.primaries);
  conventional_seconds += seconds_since(start);
  result.reports.push_back(make_report(sample, "conventional", rmse(art.conventional, phantom.ground_truth),
                                       conventional_frames, conventional_seconds, "all", timing));

  // Pipeline B: one reconstructed wavelength colorized from the on-axis color composite.
  start = std::chrono::steady_clock::now();
  std::array<Image, 3> on_axis;
  for (std::size_t c = 0; c < 3; ++c) on_axis[c] = runs[c].capture.stack.intensity(0).max(0.0).sqrt();
  art.donor = synthesize_rgb_conventional(on_axis, colorimetry.white_balance, colorimetry.primaries);
  const double donor_seconds = seconds_since(start);

  std::array<ColorImage, 3> colorized;
  std::array<ColorRmse, 3> colorized_err;
  std::array<double, 3> colorized_seconds{};
  for (std::size_t c = 0; c < 3; ++c) {
    start = std::chrono::steady_clock::now();
    colorized[c] = transfer::cfpm_colorize(art.donor, runs[c].amplitude, options).srgb;
    colorized_seconds[c] = runs[c].seconds + donor_seconds + seconds_since(start);
    colorized_err[c] = rmse(colorized[c], phantom.ground_truth);
  }

  std::size_t best = 0;
  switch (config.channel_policy) {
    case ChannelPolicy::Best:
      for (std::size_t c = 1; c < 3; ++c)
        if (colorized_err[c].mean < colorized_err[best].mean) best = c;
      break;
    case ChannelPolicy::Red: best = 0; break;
    case ChannelPolicy::Green: best = 1; break;
    case ChannelPolicy::Blue: best = 2; break;
  }
  art.cfpm = colorized[best];
  art.cfpm_channel = best;
  const int cfpm_frames = static_cast<int>(runs[best].capture.plan.size()) + 3;
  result.reports.push_back(make_report(sample, "cfpm", colorized_err[best], cfpm_frames,
                                       colorized_seconds[best], channel_name(best), timing));
  for (std::size_t c = 0; c < 3; ++c)
    result.reports.push_back(make_report(sample, "cfpm_" + channel_name(c), colorized_err[c],
                                         static_cast<int>(runs[c].capture.plan.size()) + 3, colorized_seconds[c],
                                         channel_name(c), timing));

  // Small-FOV high-resolution donor: a ground-truth tile placed by the seed.
  const Eigen::Index side = std::max<Eigen::Index>(
      8, static_cast<Eigen::Index>(std::lround(config.tile_fraction * static_cast<double>(config.hr_size))));
  std::mt19937_64 tile_rng(seed ^ 0x9E3779B97F4A7C15ULL);
  std::uniform_int_distribution<Eigen::Index> corner(0, config.hr_size - side);
  const Eigen::Index top = corner(tile_rng);
  const Eigen::Index left = corner(tile_rng);
  start = std::chrono::steady_clock::now();
  art.tile = transfer::transfer_from_tile(phantom.ground_truth.crop(top, left, side, side),
                                          runs[best].amplitude, options)
                 .srgb;
  result.reports.push_back(make_report(sample, "cfpm_tile", rmse(art.tile, phantom.ground_truth),
                                       static_cast<int>(runs[best].capture.plan.size()) + 1,
                                       runs[best].seconds + seconds_since(start), channel_name(best), timing));

  MetricsReport wmfpm;
  wmfpm.sample_id = sample;
  wmfpm.pipeline = "wmfpm";
  wmfpm.channel = "all";
  wmfpm.status = "not_implemented";
  result.reports.push_back(wmfpm);
  return result;
}

std::vector<MetricsReport> run_comparison(const RunConfig& config, std::vector<SampleArtifacts>* artifacts) {
  config.validate();
  const std::size_t count = config.seeds.size();
  std::vector<SampleResult> results(count);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        results[i] = run_sample(config.seeds[i], config);
      } catch (...) {
        const std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, config.jobs));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, count); ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  std::vector<MetricsReport> reports;
  for (auto& r : results) {
    reports.insert(reports.end(), r.reports.begin(), r.reports.end());
    if (artifacts) artifacts->push_back(std::move(r.artifacts));
  }
  return reports;
}

std::map<std::string, double> mean_rmse(const std::vector<MetricsReport>& reports) {
  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : reports)
    if (r.rmse) {
      acc[r.pipeline].first += *r.rmse;
      acc[r.pipeline].second += 1;
    }
  std::map<std::string, double> out;
  for (const auto& [name, sum] : acc) out[name] = sum.first / sum.second;
  return out;
}

std::string to_csv(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << std::setprecision(17);
  const auto opt = [&](const std::optional<double>& v) {
    if (v) os << *v;
  };
  os << "sample_id,pipeline,rmse,rmse_r,rmse_g,rmse_b,frames,seconds,channel,status\n";
  for (const auto& r : reports) {
    os << r.sample_id << ',' << r.pipeline << ',';
    opt(r.rmse);
    for (const auto& c : r.rmse_channel) {
      os << ',';
      opt(c);
    }
    os << ',' << r.frames << ',';
    opt(r.seconds);
    os << ',' << r.channel << ',' << r.status << '\n';
  }
  return os.str();
}

}  // namespace cfpm::harness
