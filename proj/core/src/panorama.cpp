#include "syncdiff/panorama.hpp"

#include <algorithm>
#include <string>

#include "syncdiff/error.hpp"

namespace syncdiff {
namespace {

void check_index(const WindowLayout& layout, std::size_t i) {
  if (i >= layout.count()) {
    throw RangeError("window index " + std::to_string(i) + " outside [0, " +
                     std::to_string(layout.count()) + ")");
  }
}

void check_window(const ImageGrid& x, const WindowLayout& layout, const char* what) {
  if (x.shape() != layout.window()) {
    throw DimensionError(std::string(what) + ": window shape " + to_string(x.shape()) +
                         " does not match layout " + to_string(layout.window()));
  }
}

void check_panorama(const ImageGrid& z, const WindowLayout& layout, const char* what) {
  if (z.shape() != layout.panorama()) {
    throw DimensionError(std::string(what) + ": panorama shape " + to_string(z.shape()) +
                         " does not match layout " + to_string(layout.panorama()));
  }
}

}  // namespace

std::size_t WindowLayout::offset(std::size_t i) const {
  check_index(*this, i);
  return i * stride_;
}

ImageGrid WindowLayout::overlap_count() const {
  ImageGrid counts({panorama_.height, panorama_.width, 1});
  for (std::size_t y = 0; y < panorama_.height; ++y) {
    for (std::size_t x = 0; x < panorama_.width; ++x) {
      counts.at(y, x, 0) = static_cast<double>(coverage_[x]);
    }
  }
  return counts;
}

WindowLayout make_layout(std::size_t panorama_height, std::size_t panorama_width,
                         std::size_t channels, std::size_t window_height,
                         std::size_t window_width, std::size_t stride, AnchorChoice anchor) {
  if (panorama_height == 0 || panorama_width == 0 || channels == 0 || window_width == 0) {
    throw GeometryError("layout dimensions must be positive");
  }
  if (window_height != panorama_height) {
    throw GeometryError("window height " + std::to_string(window_height) +
                        " must equal panorama height " + std::to_string(panorama_height));
  }
  if (window_width > panorama_width) {
    throw GeometryError("window width exceeds panorama width");
  }
  if (stride == 0) throw GeometryError("stride must be >= 1");
  if (stride > window_width) {
    throw GeometryError("stride " + std::to_string(stride) + " exceeds window width " +
                        std::to_string(window_width) + "; columns between windows would be uncovered");
  }
  const std::size_t span = panorama_width - window_width;
  if (span % stride != 0) {
    throw GeometryError("(panorama width - window width) = " + std::to_string(span) +
                        " is not a multiple of stride " + std::to_string(stride));
  }

  WindowLayout layout;
  layout.panorama_ = {panorama_height, panorama_width, channels};
  layout.window_ = {window_height, window_width, channels};
  layout.stride_ = stride;
  layout.count_ = span / stride + 1;
  layout.anchor_ = anchor.index.value_or(layout.count_ / 2);
  if (layout.anchor_ >= layout.count_) {
    throw GeometryError("anchor index " + std::to_string(layout.anchor_) + " outside [0, " +
                        std::to_string(layout.count_) + ")");
  }
  layout.coverage_.assign(panorama_width, 0);
  for (std::size_t i = 0; i < layout.count_; ++i) {
    for (std::size_t x = 0; x < window_width; ++x) ++layout.coverage_[i * stride + x];
  }
  return layout;
}

ImageGrid crop(const ImageGrid& z, const WindowLayout& layout, std::size_t i) {
  check_index(layout, i);
  check_panorama(z, layout, "crop");
  const Shape w = layout.window();
  const std::size_t x0 = layout.offset(i);
  ImageGrid out(w);
  const std::size_t row = w.width * w.channels;
  for (std::size_t y = 0; y < w.height; ++y) {
    const auto src = z.values().begin() + static_cast<std::ptrdiff_t>(z.index(y, x0, 0));
    std::copy(src, src + static_cast<std::ptrdiff_t>(row),
              out.values().begin() + static_cast<std::ptrdiff_t>(out.index(y, 0, 0)));
  }
  return out;
}

ImageGrid paste(const ImageGrid& x, const WindowLayout& layout, std::size_t i) {
  check_index(layout, i);
  check_window(x, layout, "paste");
  ImageGrid z(layout.panorama());
  const Shape w = layout.window();
  const std::size_t x0 = layout.offset(i);
  const std::size_t row = w.width * w.channels;
  for (std::size_t y = 0; y < w.height; ++y) {
    const auto src = x.values().begin() + static_cast<std::ptrdiff_t>(x.index(y, 0, 0));
    std::copy(src, src + static_cast<std::ptrdiff_t>(row),
              z.values().begin() + static_cast<std::ptrdiff_t>(z.index(y, x0, 0)));
  }
  return z;
}

ImageGrid fuse_average(const WindowSet& ws, const WindowLayout& layout) {
  if (ws.size() != layout.count()) {
    throw DimensionError("fuse_average: got " + std::to_string(ws.size()) + " windows, layout has " +
                         std::to_string(layout.count()));
  }
  for (const ImageGrid& x : ws) check_window(x, layout, "fuse_average");

  const Shape p = layout.panorama();
  const std::size_t wx = layout.window().width;
  const std::size_t stride = layout.stride();
  ImageGrid z(p);
  for (std::size_t col = 0; col < p.width; ++col) {
    // Windows covering this column form the contiguous index range [first, last].
    const std::size_t last = std::min(col / stride, layout.count() - 1);
    const std::size_t first = col + 1 > wx ? (col + 1 - wx + stride - 1) / stride : 0;
    const auto n = static_cast<double>(last - first + 1);
    for (std::size_t y = 0; y < p.height; ++y) {
      for (std::size_t c = 0; c < p.channels; ++c) {
        const double ref = ws[first].at(y, col - first * stride, c);
        double delta = 0.0;
        for (std::size_t i = first + 1; i <= last; ++i) {
          delta += ws[i].at(y, col - i * stride, c) - ref;
        }
        z.at(y, col, c) = ref + delta / n;
      }
    }
  }
  return z;
}

WindowSet scatter(const ImageGrid& z, const WindowLayout& layout) {
  check_panorama(z, layout, "scatter");
  WindowSet ws;
  ws.reserve(layout.count());
  for (std::size_t i = 0; i < layout.count(); ++i) ws.push_back(crop(z, layout, i));
  return ws;
}

}  // namespace syncdiff
