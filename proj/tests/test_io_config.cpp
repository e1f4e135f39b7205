#include "cfpm/config.hpp"
#include "cfpm/error.hpp"
#include "cfpm/harness.hpp"
#include "cfpm/io.hpp"

#include "support.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace cfpm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("cfpm-test-" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("png round trip") {
  TempDir tmp("png");
  test::Gen gen(51);
  const Image img = gen.image(17, 23);
  io::write_png(img, tmp.path / "a16.png", 16);
  io::write_png(img, tmp.path / "a8.png", 8);
  CHECK((io::read_png_gray(tmp.path / "a16.png") - img).abs().maxCoeff() <= 0.5 / 65535.0 + 1e-12);
  CHECK((io::read_png_gray(tmp.path / "a8.png") - img).abs().maxCoeff() <= 0.5 / 255.0 + 1e-12);

  ColorImage color(9, 5, ColorSpace::sRGB);
  for (auto& c : color.channels) c = gen.image(9, 5);
  io::write_png(color, tmp.path / "c.png");
  const ColorImage back = io::read_png_color(tmp.path / "c.png");
  for (std::size_t c = 0; c < 3; ++c) CHECK((back[c] - color[c]).abs().maxCoeff() <= 0.5 / 65535.0 + 1e-12);
  CHECK_THROWS_AS(io::read_png_gray(tmp.path / "c.png"), IoError);

  const ColorImage gray = io::read_png_color(tmp.path / "a16.png");
  CHECK((gray[0] == gray[2]).all());

  // Values outside [0, 1] are clamped on write.
  io::write_png(Image::Constant(2, 2, 1.7), tmp.path / "hot.png");
  CHECK((io::read_png_gray(tmp.path / "hot.png") == 1.0).all());
}

TEST_CASE("tiff round trip is exact in single precision") {
  TempDir tmp("tiff");
  test::Gen gen(52);
  const Image img = gen.image(31, 7, -3.0, 40.0);
  io::write_tiff(img, tmp.path / "a.tif");
  const Image back = io::read_tiff(tmp.path / "a.tif");
  CHECK((back == img.cast<float>().cast<double>()).all());
  CHECK((io::read_gray(tmp.path / "a.tif") == back).all());
}

TEST_CASE("io errors") {
  CHECK_THROWS_AS(io::read_png_gray("/nonexistent/x.png"), IoError);
  CHECK_THROWS_AS(io::read_tiff("/nonexistent/x.tif"), IoError);
  CHECK_THROWS_AS(io::write_png(Image::Zero(2, 2), "/nonexistent/dir/x.png"), IoError);
  CHECK_THROWS_AS(io::read_gray("x.bmp"), IoError);
  TempDir tmp("garbage");
  std::ofstream(tmp.path / "bad.png") << "not a png";
  CHECK_THROWS_AS(io::read_png_gray(tmp.path / "bad.png"), IoError);
}

TEST_CASE("stack save and load") {
  RunConfig c;
  c.hr_size = 64;
  c.lr_size = 16;
  const auto phantom = harness::generate_phantom(2, 64);
  const auto cap = harness::capture_channel(phantom, 1, 2, c);
  io::StoredStack stored{cap.stack, cap.plan, c.system(1), 0.0, 2, false};

  for (auto format : {FrameFormat::Png16, FrameFormat::Tiff32}) {
    TempDir tmp(format == FrameFormat::Png16 ? "stack-png" : "stack-tif");
    io::save_stack(tmp.path, stored, format);
    const auto back = io::load_stack(tmp.path);
    REQUIRE(back.stack.size() == 225);
    CHECK(back.stack.scale == stored.stack.scale);
    CHECK(back.system.geometry == stored.system.geometry);
    CHECK(back.system.grid == stored.system.grid);
    CHECK(back.system.wavelength_um == stored.system.wavelength_um);
    CHECK(back.seed == 2);
    CHECK(!back.all_pass);
    const double tol = format == FrameFormat::Png16 ? 0.5 / 65535.0 + 1e-12 : 1e-7;
    for (std::size_t i = 0; i < back.stack.size(); ++i) {
      CHECK(back.plan[i].row == stored.plan[i].row);
      CHECK(back.plan[i].kx == stored.plan[i].kx);
      CHECK((back.stack.frames[i] - stored.stack.frames[i]).abs().maxCoeff() <= tol);
    }
  }
  CHECK_THROWS_AS(io::load_stack("/nonexistent"), IoError);
}

TEST_CASE("config json round trip") {
  RunConfig c;
  c.na = 0.12;
  c.seeds = {4, 9};
  c.channel_policy = ChannelPolicy::Green;
  c.dispersion = transfer::Dispersion::Variance;
  c.geometry.offset_x_mm = 0.5;
  c.frame_format = FrameFormat::Tiff32;
  const nlohmann::json j = c;
  CHECK(j.get<RunConfig>() == c);

  TempDir tmp("config");
  save_config(c, tmp.path / "c.json");
  CHECK(load_config(tmp.path / "c.json") == c);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(nlohmann::json({{"colour", 1}}).get<RunConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json({{"geometry", {{"spacing", 4}}}}).get<RunConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json({{"channel_policy", "violet"}}).get<RunConfig>(), ConfigError);
  CHECK_THROWS_AS(nlohmann::json({{"na", "wide"}}).get<RunConfig>(), ConfigError);

  RunConfig bad;
  bad.na = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.lr_size = 60;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.neighborhood = 4;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.na = 0.6;  // pupil no longer fits the frame
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  RunConfig{}.validate();

  TempDir tmp("config-bad");
  std::ofstream(tmp.path / "broken.json") << "{ not json";
  CHECK_THROWS_AS(load_config(tmp.path / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_config(tmp.path / "missing.json"), IoError);
}

TEST_CASE("committed default config equals the built-in defaults") {
  CHECK(load_config(fs::path(CFPM_SOURCE_DIR) / "config" / "default.json") == RunConfig{});
}
