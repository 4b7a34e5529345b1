#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "syncdiff/grid.hpp"

namespace syncdiff::tools {

// Tensor file ("SDT1"): magic, u32 ndim, u32 dims, then the row-major
// float32 payload; little-endian throughout. Grids are written as
// [H, W, D]; rank-2 files read back as D = 1.
std::string encode_tensor(const ImageGrid& grid);
ImageGrid decode_tensor(std::string_view bytes);
void write_tensor(const std::filesystem::path& path, const ImageGrid& grid);
ImageGrid read_tensor(const std::filesystem::path& path);

/// Rounds every value to float32, the precision tensor files store.
ImageGrid quantize_f32(const ImageGrid& grid);

/// 8-bit levels: clamp to [-1, 1], map to (v + 1) / 2 * 255, round half
/// away from zero.
std::uint8_t to_level(double v);

/// 8-bit grey (D = 1) or RGB (D = 3) PNG; other channel counts raise
/// DimensionError.
std::string render_png(const ImageGrid& grid);

struct DecodedPng {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 0;
  std::vector<std::uint8_t> pixels;
};
DecodedPng decode_png(std::string_view bytes);

void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace syncdiff::tools
