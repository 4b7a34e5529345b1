#include "syncdiff/grid.hpp"

#include <algorithm>
#include <cmath>

#include "syncdiff/error.hpp"

namespace syncdiff {

std::string to_string(const Shape& shape) {
  return std::to_string(shape.height) + "x" + std::to_string(shape.width) + "x" +
         std::to_string(shape.channels);
}

ImageGrid::ImageGrid(Shape shape, double fill) : shape_(shape), data_(shape.size(), fill) {}

ImageGrid::ImageGrid(Shape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.size()) {
    throw DimensionError("grid of shape " + to_string(shape_) + " needs " +
                         std::to_string(shape_.size()) + " values, got " +
                         std::to_string(data_.size()));
  }
}

void require_same_shape(const ImageGrid& a, const ImageGrid& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + to_string(a.shape()) +
                         " vs " + to_string(b.shape()));
  }
}

ImageGrid linear_combination(double a, const ImageGrid& x, double b, const ImageGrid& y) {
  require_same_shape(x, y, "linear_combination");
  ImageGrid out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + b * y[i];
  return out;
}

ImageGrid scaled(double a, const ImageGrid& x) {
  ImageGrid out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i];
  return out;
}

double dot(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double max_abs_difference(const ImageGrid& a, const ImageGrid& b) {
  require_same_shape(a, b, "max_abs_difference");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace syncdiff
