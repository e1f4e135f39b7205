#include "cfpm/config.hpp"

#include "cfpm/error.hpp"

#include <fstream>
#include <set>

namespace cfpm {

namespace {

template <typename Enum>
struct EnumNames;

template <>
struct EnumNames<ChannelPolicy> {
  static constexpr std::array<std::pair<ChannelPolicy, const char*>, 4> values{
      {{ChannelPolicy::Best, "best"},
       {ChannelPolicy::Red, "red"},
       {ChannelPolicy::Green, "green"},
       {ChannelPolicy::Blue, "blue"}}};
};

template <>
struct EnumNames<PhantomPreset> {
  static constexpr std::array<std::pair<PhantomPreset, const char*>, 2> values{
      {{PhantomPreset::HematoxylinEosin, "he"}, {PhantomPreset::SingleDye, "single_dye"}}};
};

template <>
struct EnumNames<FrameFormat> {
  static constexpr std::array<std::pair<FrameFormat, const char*>, 2> values{
      {{FrameFormat::Png16, "png16"}, {FrameFormat::Tiff32, "tiff32"}}};
};

template <>
struct EnumNames<transfer::Dispersion> {
  static constexpr std::array<std::pair<transfer::Dispersion, const char*>, 2> values{
      {{transfer::Dispersion::StdDev, "std"}, {transfer::Dispersion::Variance, "variance"}}};
};

template <typename Enum>
std::string enum_name(Enum value) {
  for (const auto& [v, name] : EnumNames<Enum>::values)
    if (v == value) return name;
  throw ConfigError("unnamed enum value");
}

template <typename Enum>
Enum enum_value(const std::string& key, const std::string& name) {
  for (const auto& [v, n] : EnumNames<Enum>::values)
    if (name == n) return v;
  throw ConfigError("config: invalid value '" + name + "' for " + key);
}

template <typename T>
void read(const nlohmann::json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    j.at(key).get_to(out);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad value for ") + key + ": " + e.what());
  }
}

template <typename Enum>
void read_enum(const nlohmann::json& j, const char* key, Enum& out) {
  std::string name;
  read(j, key, name);
  if (!name.empty()) out = enum_value<Enum>(key, name);
}

}  // namespace

std::vector<std::uint64_t> RunConfig::default_seeds() {
  std::vector<std::uint64_t> seeds(30);
  for (std::size_t i = 0; i < seeds.size(); ++i) seeds[i] = i + 1;
  return seeds;
}

void RunConfig::validate() const {
  const auto fail = [](const std::string& msg) { throw ConfigError("config: " + msg); };
  try {
    geometry.validate();
  } catch (const NumericalError& e) {
    fail(e.what());
  }
  if (!(na > 0.0 && na < 1.0)) fail("na must lie in (0, 1)");
  for (double w : wavelengths_um)
    if (!(w >= 0.38 && w <= 0.78)) fail("wavelengths must lie in [0.38, 0.78] µm");
  if (hr_size < 64) fail("hr_size must be at least 64");
  if (upsample < 1) fail("upsample must be positive");
  if (lr_size * upsample != hr_size) fail("lr_size * upsample must equal hr_size");
  if (!(hr_pixel_um > 0.0)) fail("hr_pixel_um must be positive");
  if (iterations < 0) fail("iterations must be non-negative");
  if (noise_sigma < 0.0) fail("noise_sigma must be non-negative");
  if (seeds.empty()) fail("seed list is empty");
  if (neighborhood < 1 || neighborhood % 2 == 0) fail("neighborhood must be odd and positive");
  if (donor_stride < 1) fail("donor_stride must be positive");
  if (!(tile_fraction > 0.0 && tile_fraction <= 1.0)) fail("tile_fraction must lie in (0, 1]");
  if (jobs < 1) fail("jobs must be positive");
  if (output_dir.empty()) fail("output_dir is empty");

  if (!perfect_optics) {
    // Pupils must fit the frame and every shifted pupil must stay on the spectrum grid.
    for (std::size_t c = 0; c < 3; ++c) {
      const fpm::FpmSystem sys = system(c);
      try {
        fpm::synthetic_support(sys.plan(), sys.pupil(), sys.grid);
      } catch (const NumericalError& e) {
        fail(channel_name(c) + " channel: " + e.what());
      }
    }
  }
}

fpm::OpticalGrid RunConfig::grid() const {
  return {hr_size, upsample, hr_pixel_um};
}

fpm::FpmSystem RunConfig::system(std::size_t channel) const {
  return {geometry, na, wavelengths_um.at(channel), grid()};
}

transfer::TransferOptions RunConfig::transfer_options() const {
  transfer::TransferOptions o;
  o.stats.window = neighborhood;
  o.stats.dispersion = dispersion;
  o.donor_stride = donor_stride;
  return o;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json{
      {"geometry",
       {{"rows", c.geometry.rows},
        {"cols", c.geometry.cols},
        {"pitch_mm", c.geometry.pitch_mm},
        {"height_mm", c.geometry.height_mm},
        {"offset_mm", {c.geometry.offset_x_mm, c.geometry.offset_y_mm}}}},
      {"na", c.na},
      {"wavelengths_um", c.wavelengths_um},
      {"hr_size", c.hr_size},
      {"lr_size", c.lr_size},
      {"upsample", c.upsample},
      {"hr_pixel_um", c.hr_pixel_um},
      {"iterations", c.iterations},
      {"noise_sigma", c.noise_sigma},
      {"seeds", c.seeds},
      {"channel_policy", enum_name(c.channel_policy)},
      {"output_dir", c.output_dir},
      {"neighborhood", c.neighborhood},
      {"dispersion", enum_name(c.dispersion)},
      {"donor_stride", c.donor_stride},
      {"phantom_preset", enum_name(c.phantom_preset)},
      {"frame_format", enum_name(c.frame_format)},
      {"tile_fraction", c.tile_fraction},
      {"jobs", c.jobs},
      {"record_timing", c.record_timing},
      {"perfect_optics", c.perfect_optics},
  };
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  static const std::set<std::string> known{
      "geometry",     "na",           "wavelengths_um", "hr_size",        "lr_size",
      "upsample",     "hr_pixel_um",  "iterations",     "noise_sigma",    "seeds",
      "channel_policy", "output_dir", "neighborhood",   "dispersion",     "donor_stride",
      "phantom_preset", "frame_format", "tile_fraction", "jobs",          "record_timing",
      "perfect_optics"};
  for (const auto& item : j.items())
    if (!known.contains(item.key())) throw ConfigError("config: unknown key '" + item.key() + "'");

  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    static const std::set<std::string> geometry_keys{"rows", "cols", "pitch_mm", "height_mm", "offset_mm"};
    for (const auto& item : g.items())
      if (!geometry_keys.contains(item.key()))
        throw ConfigError("config: unknown geometry key '" + item.key() + "'");
    read(g, "rows", c.geometry.rows);
    read(g, "cols", c.geometry.cols);
    read(g, "pitch_mm", c.geometry.pitch_mm);
    read(g, "height_mm", c.geometry.height_mm);
    std::array<double, 2> offset{c.geometry.offset_x_mm, c.geometry.offset_y_mm};
    read(g, "offset_mm", offset);
    c.geometry.offset_x_mm = offset[0];
    c.geometry.offset_y_mm = offset[1];
  }
  read(j, "na", c.na);
  read(j, "wavelengths_um", c.wavelengths_um);
  read(j, "hr_size", c.hr_size);
  read(j, "lr_size", c.lr_size);
  read(j, "upsample", c.upsample);
  read(j, "hr_pixel_um", c.hr_pixel_um);
  read(j, "iterations", c.iterations);
  read(j, "noise_sigma", c.noise_sigma);
  read(j, "seeds", c.seeds);
  read_enum(j, "channel_policy", c.channel_policy);
  read(j, "output_dir", c.output_dir);
  read(j, "neighborhood", c.neighborhood);
  read_enum(j, "dispersion", c.dispersion);
  read(j, "donor_stride", c.donor_stride);
  read_enum(j, "phantom_preset", c.phantom_preset);
  read_enum(j, "frame_format", c.frame_format);
  read(j, "tile_fraction", c.tile_fraction);
  read(j, "jobs", c.jobs);
  read(j, "record_timing", c.record_timing);
  read(j, "perfect_optics", c.perfect_optics);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: " + path.string() + ": " + e.what());
  }
  RunConfig config = j.get<RunConfig>();
  config.validate();
  return config;
}

void save_config(const RunConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << nlohmann::json(config).dump(2) << '\n';
  if (!out) throw IoError("failed writing config " + path.string());
}

std::string to_string(ChannelPolicy policy) { return enum_name(policy); }

std::string channel_name(std::size_t channel) {
  static const std::array<const char*, 3> names{"red", "green", "blue"};
  return names.at(channel);
}

}  // namespace cfpm
