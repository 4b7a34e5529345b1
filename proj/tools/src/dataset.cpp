#include "syncdiff/tools/dataset.hpp"

#include <cmath>
#include <numbers>

#include "syncdiff/error.hpp"
#include "syncdiff/rng.hpp"

namespace syncdiff::tools {

void TextureDatasetSpec::validate() const {
  if (count == 0) throw RangeError("dataset.count must be positive");
  if (shape.size() == 0) throw RangeError("dataset shape must be nonempty");
  if (orientation_max < orientation_min) throw RangeError("dataset orientation range is inverted");
  if (!(frequency_min > 0.0) || frequency_max < frequency_min) {
    throw RangeError("dataset frequency range must be positive and ordered");
  }
  if (!(palette_range >= 0.0 && palette_range <= 1.0)) {
    throw RangeError("dataset.palette_range must lie in [0, 1]");
  }
}

TextureStyle texture_style(const TextureDatasetSpec& spec, std::size_t i) {
  RngStream rng(spec.seed, StreamDomain::kDataset, i);
  TextureStyle s;
  s.orientation = spec.orientation_min + (spec.orientation_max - spec.orientation_min) * rng.uniform();
  s.frequency = spec.frequency_min + (spec.frequency_max - spec.frequency_min) * rng.uniform();
  s.phase = 2.0 * std::numbers::pi * rng.uniform();
  s.color0.resize(spec.shape.channels);
  s.color1.resize(spec.shape.channels);
  for (double& c : s.color0) c = spec.palette_range * (2.0 * rng.uniform() - 1.0);
  for (double& c : s.color1) c = spec.palette_range * (2.0 * rng.uniform() - 1.0);
  return s;
}

ImageGrid render_texture(const TextureStyle& style, const Shape& shape) {
  if (style.color0.size() != shape.channels || style.color1.size() != shape.channels) {
    throw DimensionError("texture palette does not match channel count");
  }
  ImageGrid g(shape);
  const double k = 2.0 * std::numbers::pi * style.frequency / static_cast<double>(shape.height);
  const double cx = std::cos(style.orientation);
  const double sy = std::sin(style.orientation);
  for (std::size_t y = 0; y < shape.height; ++y) {
    for (std::size_t x = 0; x < shape.width; ++x) {
      const double u = k * (cx * static_cast<double>(x) + sy * static_cast<double>(y)) + style.phase;
      const double s = 0.5 + 0.5 * std::sin(u);
      for (std::size_t c = 0; c < shape.channels; ++c) {
        g.at(y, x, c) = style.color0[c] + s * (style.color1[c] - style.color0[c]);
      }
    }
  }
  return g;
}

std::vector<ImageGrid> make_texture_dataset(const TextureDatasetSpec& spec) {
  spec.validate();
  std::vector<ImageGrid> out;
  out.reserve(spec.count);
  for (std::size_t i = 0; i < spec.count; ++i) {
    out.push_back(render_texture(texture_style(spec, i), spec.shape));
  }
  return out;
}

}  // namespace syncdiff::tools
