#include "cfpm/io.hpp"

#include "cfpm/error.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <bit>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>
#include <vector>

namespace cfpm::io {

namespace {

using FilePtr = std::unique_ptr<std::FILE, decltype(&std::fclose)>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode), &std::fclose);
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

[[noreturn]] void png_fail(png_structp png, png_const_charp message) {
  auto* text = static_cast<std::string*>(png_get_error_ptr(png));
  *text = message;
  std::longjmp(png_jmpbuf(png), 1);
}

// Planes hold [0,1] samples; `channels` is 1 or 3.
void write_png_planes(const std::vector<const Image*>& planes, const std::filesystem::path& path,
                      int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw IoError("PNG bit depth must be 8 or 16");
  const Eigen::Index rows = planes[0]->rows();
  const Eigen::Index cols = planes[0]->cols();
  if (rows == 0 || cols == 0) throw IoError("cannot write an empty image to " + path.string());
  const auto channels = planes.size();
  const double max_value = bit_depth == 8 ? 255.0 : 65535.0;
  const std::size_t bytes = bit_depth / 8;

  std::vector<png_byte> buffer(static_cast<std::size_t>(rows * cols) * channels * bytes);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c)
      for (std::size_t ch = 0; ch < channels; ++ch) {
        const double v = std::clamp((*planes[ch])(r, c), 0.0, 1.0);
        const auto q = static_cast<unsigned>(std::lround(v * max_value));
        const std::size_t at = ((static_cast<std::size_t>(r * cols + c)) * channels + ch) * bytes;
        if (bytes == 1) {
          buffer[at] = static_cast<png_byte>(q);
        } else {
          buffer[at] = static_cast<png_byte>(q >> 8);
          buffer[at + 1] = static_cast<png_byte>(q & 0xFF);
        }
      }

  FilePtr file = open_file(path, "wb");
  std::string error;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("writing " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(cols), static_cast<png_uint_32>(rows), bit_depth,
               channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(cols) * channels * bytes;
  for (Eigen::Index r = 0; r < rows; ++r) png_write_row(png, buffer.data() + static_cast<std::size_t>(r) * stride);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

struct PngData {
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  int channels = 0;
  std::vector<double> samples;  // interleaved, normalized
};

PngData read_png(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  std::array<png_byte, 8> sig{};
  if (std::fread(sig.data(), 1, sig.size(), file.get()) != sig.size() || png_sig_cmp(sig.data(), 0, sig.size()))
    throw IoError(path.string() + " is not a PNG file");

  // Everything with a destructor lives outside the setjmp scope.
  std::string error;
  PngData out;
  std::vector<png_byte> buffer;
  std::vector<png_bytep> rows;
  int depth = 8;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_fail, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("reading " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, static_cast<int>(sig.size()));
  png_read_info(png, info);

  png_set_expand(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.rows = png_get_image_height(png, info);
  out.cols = png_get_image_width(png, info);
  out.channels = png_get_channels(png, info);
  depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  buffer.resize(stride * static_cast<std::size_t>(out.rows));
  rows.resize(static_cast<std::size_t>(out.rows));
  for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = buffer.data() + r * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = static_cast<std::size_t>(out.rows * out.cols) * static_cast<std::size_t>(out.channels);
  out.samples.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    out.samples[i] = depth == 16 ? ((buffer[2 * i] << 8) | buffer[2 * i + 1]) / 65535.0 : buffer[i] / 255.0;
  return out;
}

// Little-endian TIFF helpers.
template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename T>
T get(const std::vector<std::uint8_t>& in, std::size_t at) {
  if (at + sizeof(T) > in.size()) throw IoError("truncated TIFF file");
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(static_cast<T>(in[at + i]) << (8 * i));
  return value;
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string frame_name(std::size_t i, FrameFormat format) {
  std::ostringstream os;
  os << "frame_" << std::setw(4) << std::setfill('0') << i << (format == FrameFormat::Png16 ? ".png" : ".tif");
  return os.str();
}

}  // namespace

void write_png(const Image& img, const std::filesystem::path& path, int bit_depth) {
  write_png_planes({&img}, path, bit_depth);
}

void write_png(const ColorImage& img, const std::filesystem::path& path, int bit_depth) {
  write_png_planes({&img[0], &img[1], &img[2]}, path, bit_depth);
}

Image read_png_gray(const std::filesystem::path& path) {
  const PngData data = read_png(path);
  if (data.channels != 1) throw IoError(path.string() + " is not a grayscale PNG");
  Image out(data.rows, data.cols);
  std::copy(data.samples.begin(), data.samples.end(), out.data());
  return out;
}

ColorImage read_png_color(const std::filesystem::path& path) {
  const PngData data = read_png(path);
  ColorImage out(data.rows, data.cols, ColorSpace::sRGB);
  for (Eigen::Index i = 0; i < data.rows * data.cols; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      const std::size_t src = static_cast<std::size_t>(i) * static_cast<std::size_t>(data.channels) +
                              (data.channels == 1 ? 0 : c);
      out[c].data()[i] = data.samples[src];
    }
  return out;
}

void write_tiff(const Image& img, const std::filesystem::path& path) {
  if (img.size() == 0) throw IoError("cannot write an empty image to " + path.string());
  const auto rows = static_cast<std::uint32_t>(img.rows());
  const auto cols = static_cast<std::uint32_t>(img.cols());
  const std::uint32_t data_bytes = rows * cols * 4;

  std::vector<std::uint8_t> out{'I', 'I', 42, 0};
  put<std::uint32_t>(out, 8 + data_bytes);  // IFD follows the pixel data
  for (Eigen::Index i = 0; i < img.size(); ++i) put<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(img.data()[i])));

  struct Entry {
    std::uint16_t tag, type;
    std::uint32_t value;
  };
  constexpr std::uint16_t kShort = 3;
  constexpr std::uint16_t kLong = 4;
  const std::array<Entry, 10> entries{{{256, kLong, cols},
                                       {257, kLong, rows},
                                       {258, kShort, 32},
                                       {259, kShort, 1},
                                       {262, kShort, 1},
                                       {273, kLong, 8},
                                       {277, kShort, 1},
                                       {278, kLong, rows},
                                       {279, kLong, data_bytes},
                                       {339, kShort, 3}}};
  put<std::uint16_t>(out, static_cast<std::uint16_t>(entries.size()));
  for (const auto& e : entries) {
    put<std::uint16_t>(out, e.tag);
    put<std::uint16_t>(out, e.type);
    put<std::uint32_t>(out, 1);
    if (e.type == kShort) {
      put<std::uint16_t>(out, static_cast<std::uint16_t>(e.value));
      put<std::uint16_t>(out, 0);
    } else {
      put<std::uint32_t>(out, e.value);
    }
  }
  put<std::uint32_t>(out, 0);

  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot open " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("failed writing " + path.string());
}

Image read_tiff(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> in = read_bytes(path);
  if (in.size() < 8 || in[0] != 'I' || in[1] != 'I' || get<std::uint16_t>(in, 2) != 42)
    throw IoError(path.string() + " is not a little-endian TIFF file");

  const auto ifd = get<std::uint32_t>(in, 4);
  const auto count = get<std::uint16_t>(in, ifd);
  std::uint32_t width = 0, height = 0, bits = 0, format = 1, samples = 1, compression = 1;
  std::vector<std::uint32_t> offsets, byte_counts;
  const auto read_values = [&](std::size_t entry) {
    const auto type = get<std::uint16_t>(in, entry + 2);
    const auto n = get<std::uint32_t>(in, entry + 4);
    const std::size_t size = type == 3 ? 2 : 4;
    const std::size_t at = n * size <= 4 ? entry + 8 : get<std::uint32_t>(in, entry + 8);
    std::vector<std::uint32_t> values;
    for (std::uint32_t k = 0; k < n; ++k)
      values.push_back(size == 2 ? get<std::uint16_t>(in, at + 2 * k) : get<std::uint32_t>(in, at + 4 * k));
    return values;
  };
  for (std::uint16_t i = 0; i < count; ++i) {
    const std::size_t entry = ifd + 2 + 12 * static_cast<std::size_t>(i);
    const auto tag = get<std::uint16_t>(in, entry);
    const auto values = read_values(entry);
    switch (tag) {
      case 256: width = values.at(0); break;
      case 257: height = values.at(0); break;
      case 258: bits = values.at(0); break;
      case 259: compression = values.at(0); break;
      case 273: offsets = values; break;
      case 277: samples = values.at(0); break;
      case 279: byte_counts = values; break;
      case 339: format = values.at(0); break;
      default: break;
    }
  }
  if (bits != 32 || format != 3 || samples != 1 || compression != 1)
    throw IoError(path.string() + ": only uncompressed single-channel float32 TIFF is supported");
  if (offsets.size() != byte_counts.size() || offsets.empty()) throw IoError(path.string() + ": bad strip layout");

  Image out(height, width);
  std::size_t written = 0;
  for (std::size_t s = 0; s < offsets.size(); ++s)
    for (std::uint32_t b = 0; b + 4 <= byte_counts[s] && written < static_cast<std::size_t>(out.size()); b += 4)
      out.data()[written++] = std::bit_cast<float>(get<std::uint32_t>(in, offsets[s] + b));
  if (written != static_cast<std::size_t>(out.size())) throw IoError(path.string() + ": truncated pixel data");
  return out;
}

Image read_gray(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return read_png_gray(path);
  if (ext == ".tif" || ext == ".tiff") return read_tiff(path);
  throw IoError("unsupported image extension: " + path.string());
}

void write_gray(const Image& img, const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".png") return write_png(img, path, 16);
  if (ext == ".tif" || ext == ".tiff") return write_tiff(img, path);
  throw IoError("unsupported image extension: " + path.string());
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void save_stack(const std::filesystem::path& dir, const StoredStack& stored, FrameFormat format) {
  if (stored.stack.size() != stored.plan.size()) throw NumericalError("save_stack: stack and plan lengths differ");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  nlohmann::json frames = nlohmann::json::array();
  for (std::size_t i = 0; i < stored.stack.size(); ++i) {
    const std::string name = frame_name(i, format);
    if (format == FrameFormat::Png16)
      write_png(stored.stack.frames[i], dir / name, 16);
    else
      write_tiff(stored.stack.frames[i], dir / name);
    const auto& led = stored.plan[i];
    frames.push_back({{"file", name}, {"led", {led.row, led.col}}, {"k", {led.kx, led.ky}}});
  }
  const auto& sys = stored.system;
  const nlohmann::json manifest{
      {"wavelength_um", sys.wavelength_um},
      {"na", sys.na},
      {"geometry",
       {{"rows", sys.geometry.rows},
        {"cols", sys.geometry.cols},
        {"pitch_mm", sys.geometry.pitch_mm},
        {"height_mm", sys.geometry.height_mm},
        {"offset_mm", {sys.geometry.offset_x_mm, sys.geometry.offset_y_mm}}}},
      {"grid", {{"hr_size", sys.grid.hr_size}, {"upsample", sys.grid.ratio}, {"hr_pixel_um", sys.grid.hr_pixel_um}}},
      {"pupil", stored.all_pass ? "all_pass" : "disk"},
      {"normalization", stored.stack.scale},
      {"noise_sigma", stored.noise_sigma},
      {"seed", stored.seed},
      {"format", format == FrameFormat::Png16 ? "png16" : "tiff32"},
      {"frames", frames}};
  write_json(manifest, dir / "manifest.json");
}

StoredStack load_stack(const std::filesystem::path& dir) {
  const nlohmann::json m = read_json(dir / "manifest.json");
  StoredStack out;
  try {
    out.system.wavelength_um = m.at("wavelength_um").get<double>();
    out.system.na = m.at("na").get<double>();
    const auto& g = m.at("geometry");
    out.system.geometry.rows = g.at("rows").get<int>();
    out.system.geometry.cols = g.at("cols").get<int>();
    out.system.geometry.pitch_mm = g.at("pitch_mm").get<double>();
    out.system.geometry.height_mm = g.at("height_mm").get<double>();
    out.system.geometry.offset_x_mm = g.at("offset_mm").at(0).get<double>();
    out.system.geometry.offset_y_mm = g.at("offset_mm").at(1).get<double>();
    const auto& grid = m.at("grid");
    out.system.grid.hr_size = grid.at("hr_size").get<Eigen::Index>();
    out.system.grid.ratio = grid.at("upsample").get<int>();
    out.system.grid.hr_pixel_um = grid.at("hr_pixel_um").get<double>();
    out.all_pass = m.at("pupil").get<std::string>() == "all_pass";
    out.stack.scale = m.at("normalization").get<double>();
    out.noise_sigma = m.at("noise_sigma").get<double>();
    out.seed = m.at("seed").get<std::uint64_t>();
    out.plan.wavelength_um = out.system.wavelength_um;
    for (const auto& f : m.at("frames")) {
      fpm::Illumination led;
      led.row = f.at("led").at(0).get<int>();
      led.col = f.at("led").at(1).get<int>();
      led.kx = f.at("k").at(0).get<double>();
      led.ky = f.at("k").at(1).get<double>();
      out.plan.entries.push_back(led);
      out.stack.frames.push_back(read_gray(dir / f.at("file").get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed manifest in " + dir.string() + ": " + e.what());
  }
  return out;
}

}  // namespace cfpm::io
