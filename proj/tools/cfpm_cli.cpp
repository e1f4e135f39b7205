// cfpm: simulate, reconstruct and colorize Fourier ptychographic captures of stained-slide phantoms.

#include "cfpm/color_transfer.hpp"
#include "cfpm/config.hpp"
#include "cfpm/error.hpp"
#include "cfpm/fpm.hpp"
#include "cfpm/harness.hpp"
#include "cfpm/io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using namespace cfpm;

namespace {

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> samples;
  std::optional<int> jobs;
  std::optional<std::string> out;
  std::optional<int> iterations;
  std::optional<double> noise;
  std::optional<double> na;
  std::optional<int> hr_size;
  std::optional<int> lr_size;
  std::optional<int> upsample;
  std::optional<double> hr_pixel;
  std::optional<std::string> channel;
  std::optional<int> neighborhood;
  std::optional<std::string> dispersion;
  std::optional<int> donor_stride;
  std::optional<std::string> preset;
  std::optional<std::string> format;
  std::optional<double> tile_fraction;
  bool record_timing = false;
  bool perfect_optics = false;
};

void add_config_options(CLI::App& app, Overrides& o) {
  app.add_option("--config", o.config_path, "JSON config; missing keys keep their defaults");
  app.add_option("--seed", o.seed, "first phantom seed");
  app.add_option("--samples", o.samples, "number of consecutive seeds");
  app.add_option("--jobs", o.jobs, "samples processed concurrently");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--iterations", o.iterations, "reconstruction iterations");
  app.add_option("--noise", o.noise, "Gaussian noise sigma on normalized frames");
  app.add_option("--na", o.na, "objective numerical aperture");
  app.add_option("--hr-size", o.hr_size, "high-resolution side in pixels");
  app.add_option("--lr-size", o.lr_size, "low-resolution side in pixels");
  app.add_option("--upsample", o.upsample, "high/low resolution ratio");
  app.add_option("--hr-pixel", o.hr_pixel, "high-resolution pixel size in micrometres");
  app.add_option("--channel", o.channel, "acceptor channel: best, red, green or blue");
  app.add_option("--neighborhood", o.neighborhood, "statistics window side");
  app.add_option("--dispersion", o.dispersion, "std or variance");
  app.add_option("--donor-stride", o.donor_stride, "donor subsampling stride");
  app.add_option("--preset", o.preset, "phantom preset: he or single_dye");
  app.add_option("--format", o.format, "frame format: png16 or tiff32");
  app.add_option("--tile-fraction", o.tile_fraction, "small-FOV donor side as a fraction of the field");
  app.add_flag("--record-timing", o.record_timing, "store wall-clock seconds in the metrics");
  app.add_flag("--perfect-optics", o.perfect_optics, "all-pass single-frame acquisition");
}

RunConfig effective_config(const Overrides& o) {
  RunConfig c = o.config_path.empty() ? RunConfig{} : load_config(o.config_path);
  nlohmann::json j = c;
  if (o.seed || o.samples) {
    const std::uint64_t first = o.seed.value_or(1);
    const int count = o.samples.value_or(1);
    if (count < 1) throw ConfigError("--samples must be positive");
    std::vector<std::uint64_t> seeds;
    for (int i = 0; i < count; ++i) seeds.push_back(first + static_cast<std::uint64_t>(i));
    j["seeds"] = seeds;
  }
  if (o.jobs) j["jobs"] = *o.jobs;
  if (o.out) j["output_dir"] = *o.out;
  if (o.iterations) j["iterations"] = *o.iterations;
  if (o.noise) j["noise_sigma"] = *o.noise;
  if (o.na) j["na"] = *o.na;
  if (o.hr_size) j["hr_size"] = *o.hr_size;
  if (o.lr_size) j["lr_size"] = *o.lr_size;
  if (o.upsample) j["upsample"] = *o.upsample;
  if (o.hr_pixel) j["hr_pixel_um"] = *o.hr_pixel;
  if (o.channel) j["channel_policy"] = *o.channel;
  if (o.neighborhood) j["neighborhood"] = *o.neighborhood;
  if (o.dispersion) j["dispersion"] = *o.dispersion;
  if (o.donor_stride) j["donor_stride"] = *o.donor_stride;
  if (o.preset) j["phantom_preset"] = *o.preset;
  if (o.format) j["frame_format"] = *o.format;
  if (o.tile_fraction) j["tile_fraction"] = *o.tile_fraction;
  if (o.record_timing) j["record_timing"] = true;
  if (o.perfect_optics) j["perfect_optics"] = true;
  c = j.get<RunConfig>();
  c.validate();
  return c;
}

fs::path prepare_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path.string());
}

void cmd_phantom(const RunConfig& c) {
  const fs::path dir = prepare_dir(c.output_dir);
  const auto p = harness::generate_phantom(c.seeds.front(), c.hr_size, c.phantom_preset);
  io::write_png(p.ground_truth, dir / "ground_truth.png");
  for (std::size_t ch = 0; ch < 3; ++ch)
    io::write_tiff(p.amplitudes[ch], dir / ("amplitude_" + channel_name(ch) + ".tif"));
  io::write_tiff(p.phase, dir / "phase.tif");
}

void cmd_capture(const RunConfig& c) {
  const fs::path dir = prepare_dir(c.output_dir);
  const std::uint64_t seed = c.seeds.front();
  const auto p = harness::generate_phantom(seed, c.hr_size, c.phantom_preset);
  std::array<Image, 3> on_axis;
  for (std::size_t ch = 0; ch < 3; ++ch) {
    const auto cap = harness::capture_channel(p, ch, seed, c);
    io::StoredStack stored;
    stored.stack = cap.stack;
    stored.plan = cap.plan;
    stored.system = c.system(ch);
    stored.system.grid = cap.grid;
    if (c.perfect_optics) stored.system.geometry.rows = stored.system.geometry.cols = 1;
    stored.noise_sigma = c.noise_sigma;
    stored.seed = seed;
    stored.all_pass = c.perfect_optics;
    io::save_stack(dir / channel_name(ch), stored, c.frame_format);
    on_axis[ch] = cap.stack.intensity(0).max(0.0).sqrt();
  }
  const harness::Colorimetry colorimetry;
  io::write_png(harness::synthesize_rgb_conventional(on_axis, colorimetry.white_balance, colorimetry.primaries),
                dir / "donor.png");
  io::write_png(p.ground_truth, dir / "ground_truth.png");
}

void cmd_reconstruct(const RunConfig& c, const std::string& stack_dir, const std::string& out_file) {
  const io::StoredStack stored = io::load_stack(stack_dir);
  const auto& grid = stored.system.grid;
  const fpm::Pupil pupil = stored.all_pass ? fpm::all_pass_pupil(grid.lr_size(), grid.dk())
                                           : stored.system.pupil();
  const auto rec = fpm::reconstruct(stored.stack, stored.plan, pupil, grid, {c.iterations, false});
  if (rec.low_overlap) std::cerr << "warning: pupil overlap " << rec.overlap << " is below 0.35\n";
  const fs::path out(out_file);
  if (out.has_parent_path()) prepare_dir(out.parent_path().string());
  io::write_gray(rec.field.amplitude(), out);
}

void cmd_colorize(const RunConfig& c, const std::string& donor, const std::string& acceptor,
                  const std::string& out_file, bool tile) {
  const ColorImage d = io::read_png_color(donor);
  const Image a = io::read_gray(acceptor);
  const auto result = tile ? transfer::transfer_from_tile(d, a, c.transfer_options())
                           : transfer::cfpm_colorize(d, a, c.transfer_options());
  io::write_png(result.srgb, out_file);
}

void cmd_synthesize(const std::array<std::string, 3>& inputs, const std::string& out_file) {
  std::array<Image, 3> amps;
  for (std::size_t ch = 0; ch < 3; ++ch) amps[ch] = io::read_gray(inputs[ch]);
  const harness::Colorimetry colorimetry;
  io::write_png(harness::synthesize_rgb_conventional(amps, colorimetry.white_balance, colorimetry.primaries),
                out_file);
}

void cmd_evaluate(const std::string& image, const std::string& reference, const std::string& out_file) {
  const auto err = harness::rmse(io::read_png_color(image), io::read_png_color(reference));
  const nlohmann::json j{{"rmse", err.mean}, {"rmse_r", err.channel[0]}, {"rmse_g", err.channel[1]},
                         {"rmse_b", err.channel[2]}};
  std::cout << j.dump() << '\n';
  if (!out_file.empty()) io::write_json(j, out_file);
}

void cmd_run_all(const RunConfig& c) {
  const fs::path dir = prepare_dir(c.output_dir);
  std::vector<harness::SampleArtifacts> artifacts;
  const auto reports = harness::run_comparison(c, &artifacts);

  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    const auto& a = artifacts[i];
    const fs::path sample = prepare_dir((dir / harness::sample_id(c.seeds[i])).string());
    io::write_png(a.ground_truth, sample / "ground_truth.png");
    io::write_png(a.donor, sample / "donor.png");
    io::write_png(a.conventional, sample / "conventional.png");
    io::write_png(a.cfpm, sample / "cfpm.png");
    io::write_png(a.tile, sample / "cfpm_tile.png");
    for (std::size_t ch = 0; ch < 3; ++ch)
      io::write_tiff(a.reconstructed_amplitude[ch], sample / ("amplitude_" + channel_name(ch) + ".tif"));
  }
  io::write_json(nlohmann::json(reports), dir / "metrics.json");
  write_text(dir / "metrics.csv", harness::to_csv(reports));
  save_config(c, dir / "effective_config.json");

  for (const auto& [pipeline, value] : harness::mean_rmse(reports))
    std::cout << pipeline << " mean rmse " << value << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Color-transfer Fourier ptychographic microscopy"};
  app.require_subcommand(1);

  Overrides o;
  std::string stack_dir, donor, acceptor, file_out, image, reference;
  std::array<std::string, 3> channels;
  bool tile = false;

  auto* phantom = app.add_subcommand("phantom", "write a phantom's ground truth, amplitudes and phase");
  auto* capture = app.add_subcommand("capture", "simulate per-wavelength stacks, donor and ground truth");
  auto* reconstruct = app.add_subcommand("reconstruct", "recover the amplitude of one stored stack");
  reconstruct->add_option("--stack", stack_dir, "stack directory with manifest.json")->required();
  reconstruct->add_option("--output", file_out, "amplitude image (.tif or .png)")->required();
  auto* colorize = app.add_subcommand("colorize", "transfer donor color onto an acceptor amplitude");
  colorize->add_option("--donor", donor, "donor PNG")->required();
  colorize->add_option("--acceptor", acceptor, "acceptor amplitude (.tif or .png)")->required();
  colorize->add_option("--output", file_out, "colorized PNG")->required();
  colorize->add_flag("--tile", tile, "donor is a small-FOV tile rather than the aligned full field");
  auto* synthesize = app.add_subcommand("synthesize", "combine red, green and blue amplitudes into sRGB");
  synthesize->add_option("--red", channels[0])->required();
  synthesize->add_option("--green", channels[1])->required();
  synthesize->add_option("--blue", channels[2])->required();
  synthesize->add_option("--output", file_out, "sRGB PNG")->required();
  auto* evaluate = app.add_subcommand("evaluate", "RMSE of an sRGB image against a reference");
  evaluate->add_option("--image", image)->required();
  evaluate->add_option("--reference", reference)->required();
  evaluate->add_option("--output", file_out, "optional JSON file");
  auto* run_all = app.add_subcommand("run-all", "full comparison over the seed list");

  for (auto* sub : {phantom, capture, reconstruct, colorize, synthesize, evaluate, run_all})
    add_config_options(*sub, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "cfpm: " << e.what() << '\n';
    return 2;
  }

  try {
    const RunConfig config = effective_config(o);
    if (phantom->parsed()) cmd_phantom(config);
    if (capture->parsed()) cmd_capture(config);
    if (reconstruct->parsed()) cmd_reconstruct(config, stack_dir, file_out);
    if (colorize->parsed()) cmd_colorize(config, donor, acceptor, file_out, tile);
    if (synthesize->parsed()) cmd_synthesize(channels, file_out);
    if (evaluate->parsed()) cmd_evaluate(image, reference, file_out);
    if (run_all->parsed()) cmd_run_all(config);
  } catch (const ConfigError& e) {
    std::cerr << "cfpm: " << e.what() << '\n';
    return 2;
  } catch (const IoError& e) {
    std::cerr << "cfpm: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "cfpm: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
