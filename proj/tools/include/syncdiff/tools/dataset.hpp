#pragma once

#include <cstdint>
#include <vector>

#include "syncdiff/grid.hpp"

namespace syncdiff::tools {

/// Stripe textures: each sample is a two-colour sinusoidal grating with a
/// random orientation, spatial frequency, phase and palette.
struct TextureDatasetSpec {
  std::size_t count = 512;
  Shape shape{32, 32, 3};
  /// Orientation range in radians.
  double orientation_min = 0.0;
  double orientation_max = 3.141592653589793;
  /// Cycles per grid height.
  double frequency_min = 1.5;
  double frequency_max = 4.0;
  /// Palette colour components are uniform in [-palette_range, palette_range].
  double palette_range = 0.9;
  std::uint64_t seed = 0;

  /// Throws RangeError on empty counts, inverted ranges or a palette
  /// outside [0, 1].
  void validate() const;
};

struct TextureStyle {
  double orientation = 0.0;
  double frequency = 0.0;
  double phase = 0.0;
  std::vector<double> color0;
  std::vector<double> color1;
};

/// Style of sample i, drawn from stream (seed, kDataset, i).
TextureStyle texture_style(const TextureDatasetSpec& spec, std::size_t i);
ImageGrid render_texture(const TextureStyle& style, const Shape& shape);

std::vector<ImageGrid> make_texture_dataset(const TextureDatasetSpec& spec);

}  // namespace syncdiff::tools
