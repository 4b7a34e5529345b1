#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace syncdiff {

struct Shape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::size_t size() const { return height * width * channels; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

std::string to_string(const Shape& shape);

/// Dense H x W x D grid of doubles, row-major with channels innermost.
///
/// The same type carries noisy samples, predicted clean samples and the
/// panorama itself; decoding is the identity so no separate image type
/// exists.
class ImageGrid {
 public:
  ImageGrid() = default;
  explicit ImageGrid(Shape shape, double fill = 0.0);
  ImageGrid(Shape shape, std::vector<double> values);

  const Shape& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t size() const { return data_.size(); }

  std::size_t index(std::size_t y, std::size_t x, std::size_t c) const {
    return (y * shape_.width + x) * shape_.channels + c;
  }
  double& at(std::size_t y, std::size_t x, std::size_t c) { return data_[index(y, x, c)]; }
  double at(std::size_t y, std::size_t x, std::size_t c) const { return data_[index(y, x, c)]; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }
  const std::vector<double>& storage() const { return data_; }

  friend bool operator==(const ImageGrid&, const ImageGrid&) = default;

 private:
  Shape shape_{};
  std::vector<double> data_;
};

using WindowSet = std::vector<ImageGrid>;

/// Throws DimensionError naming `what` unless both shapes agree.
void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what);

/// out = a * x + b * y, elementwise.
ImageGrid linear_combination(double a, const ImageGrid& x, double b, const ImageGrid& y);
ImageGrid scaled(double a, const ImageGrid& x);

double dot(const ImageGrid& a, const ImageGrid& b);
double max_abs_difference(const ImageGrid& a, const ImageGrid& b);

}  // namespace syncdiff
