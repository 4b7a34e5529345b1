#include "syncdiff/tools/io.hpp"

#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "syncdiff/error.hpp"

namespace syncdiff::tools {
namespace {

constexpr std::string_view kTensorMagic = "SDT1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view in, std::size_t& pos) {
  if (pos + 4 > in.size()) throw FormatError("tensor file truncated");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  }
  pos += 4;
  return v;
}

}  // namespace

std::string encode_tensor(const ImageGrid& grid) {
  std::string out(kTensorMagic);
  put_u32(out, 3);
  put_u32(out, static_cast<std::uint32_t>(grid.height()));
  put_u32(out, static_cast<std::uint32_t>(grid.width()));
  put_u32(out, static_cast<std::uint32_t>(grid.channels()));
  out.reserve(out.size() + 4 * grid.size());
  for (double v : grid.values()) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

ImageGrid decode_tensor(std::string_view bytes) {
  if (bytes.substr(0, kTensorMagic.size()) != kTensorMagic) throw FormatError("not an SDT1 tensor");
  std::size_t pos = kTensorMagic.size();
  const std::uint32_t ndim = get_u32(bytes, pos);
  if (ndim != 2 && ndim != 3) {
    throw FormatError("tensor rank " + std::to_string(ndim) + " is not a grid (expected 2 or 3)");
  }
  Shape shape{get_u32(bytes, pos), get_u32(bytes, pos), 1};
  if (ndim == 3) shape.channels = get_u32(bytes, pos);
  if (bytes.size() - pos != 4 * shape.size()) {
    throw FormatError("tensor payload holds " + std::to_string(bytes.size() - pos) +
                      " bytes, dims need " + std::to_string(4 * shape.size()));
  }
  ImageGrid grid(shape);
  for (std::size_t i = 0; i < shape.size(); ++i) {
    grid[i] = static_cast<double>(std::bit_cast<float>(get_u32(bytes, pos)));
  }
  return grid;
}

void write_tensor(const std::filesystem::path& path, const ImageGrid& grid) {
  write_file(path, encode_tensor(grid));
}

ImageGrid read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

ImageGrid quantize_f32(const ImageGrid& grid) {
  ImageGrid out = grid;
  for (double& v : out.values()) v = static_cast<double>(static_cast<float>(v));
  return out;
}

std::uint8_t to_level(double v) {
  const double c = std::clamp(v, -1.0, 1.0);
  return static_cast<std::uint8_t>(std::round((c + 1.0) / 2.0 * 255.0));
}

std::string render_png(const ImageGrid& grid) {
  if (grid.channels() != 1 && grid.channels() != 3) {
    throw DimensionError("render_png supports 1 or 3 channels, got " +
                         std::to_string(grid.channels()));
  }
  std::vector<std::uint8_t> pixels(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) pixels[i] = to_level(grid[i]);

  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(grid.width());
  image.height = static_cast<png_uint_32>(grid.height());
  image.format = grid.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png: ") + image.message);
  }
  out.resize(size);
  return out;
}

DecodedPng decode_png(std::string_view bytes) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png: ") + image.message);
  }
  const bool colour = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = colour ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  DecodedPng out;
  out.width = image.width;
  out.height = image.height;
  out.channels = colour ? 3 : 1;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png: ") + image.message);
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("short write to '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace syncdiff::tools
