#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "syncdiff/grid.hpp"
#include "syncdiff/losses.hpp"

namespace syncdiff {

struct PairValue {
  std::size_t i = 0;
  std::size_t j = 0;
  double value = 0.0;
};

struct IntraMetric {
  double mean = 0.0;
  std::size_t crop_width = 0;
  /// Every unordered crop pair (i < j), lexicographic order.
  std::vector<PairValue> pairs;
};

/// Splits z into n equal-width, non-overlapping, full-height crops.
/// Throws GeometryError when W_z is not a multiple of n.
std::vector<ImageGrid> split_crops(const ImageGrid& z, std::size_t n_crops);

/// Mean loss over all C(n_crops, 2) pairs of non-overlapping crops.
IntraMetric intra_metric(const ImageGrid& z, const PerceptualLoss& loss, std::size_t n_crops);

struct BaselineStats {
  double mean = 0.0;
  /// Population standard deviation.
  double std = 0.0;
  std::size_t pairs = 0;
};

/// Loss statistics over n_pairs random pairs of distinct samples drawn
/// from the (seed, kPairs) stream.
BaselineStats reference_baseline(std::span<const ImageGrid> samples, const PerceptualLoss& loss,
                                 std::size_t n_pairs, std::uint64_t seed);

struct LossReport {
  std::string loss;
  IntraMetric intra;
  std::optional<BaselineStats> baseline;
};

struct MetricsReport {
  Shape panorama{};
  std::size_t n_crops = 0;
  std::size_t crop_width = 0;
  std::vector<LossReport> losses;
};

MetricsReport evaluate_panorama(const ImageGrid& z, std::span<const PerceptualLoss* const> losses,
                                std::size_t n_crops);

}  // namespace syncdiff
