#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "syncdiff/grid.hpp"

namespace syncdiff {

/// Anchor selection: the centre window, or an explicit index.
struct AnchorChoice {
  std::optional<std::size_t> index;

  static AnchorChoice center() { return {}; }
  static AnchorChoice at(std::size_t i) { return {i}; }
};

/// Horizontal tiling of an H_z x W_z x D panorama by H_z x W_x windows
/// placed every `stride` columns. Window i covers columns
/// [i * stride, i * stride + W_x).
class WindowLayout {
 public:
  Shape panorama() const { return panorama_; }
  Shape window() const { return window_; }
  std::size_t stride() const { return stride_; }
  std::size_t count() const { return count_; }
  std::size_t anchor() const { return anchor_; }
  std::size_t offset(std::size_t i) const;

  /// Number of windows covering column x (identical down each column).
  std::size_t coverage(std::size_t x) const { return coverage_[x]; }
  /// Per-cell overlap counts as an H_z x W_z x 1 grid.
  ImageGrid overlap_count() const;

 private:
  friend WindowLayout make_layout(std::size_t, std::size_t, std::size_t, std::size_t, std::size_t,
                                  std::size_t, AnchorChoice);
  Shape panorama_{};
  Shape window_{};
  std::size_t stride_ = 1;
  std::size_t count_ = 0;
  std::size_t anchor_ = 0;
  std::vector<std::size_t> coverage_;
};

/// Throws GeometryError when the window does not fit, heights differ, the
/// stride exceeds the window width (leaving gaps), or (W_z - W_x) is not a
/// multiple of the stride.
WindowLayout make_layout(std::size_t panorama_height, std::size_t panorama_width,
                         std::size_t channels, std::size_t window_height,
                         std::size_t window_width, std::size_t stride,
                         AnchorChoice anchor = AnchorChoice::center());

ImageGrid crop(const ImageGrid& z, const WindowLayout& layout, std::size_t i);
/// Embeds window i into an otherwise zero panorama.
ImageGrid paste(const ImageGrid& x, const WindowLayout& layout, std::size_t i);

/// Per-cell arithmetic mean of all windows covering the cell.
///
/// Each cell is computed as r + sum_k (x_k - r) / n, where r is the value
/// from the lowest-index covering window and k runs over the other covering
/// windows in index order. This is the plain average, and it returns r
/// exactly when all covering windows agree, so fusing an already
/// consistent window set is bitwise idempotent.
ImageGrid fuse_average(const WindowSet& ws, const WindowLayout& layout);
WindowSet scatter(const ImageGrid& z, const WindowLayout& layout);

}  // namespace syncdiff
