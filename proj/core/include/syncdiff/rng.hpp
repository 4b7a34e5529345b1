#pragma once

#include <cstdint>

#include "syncdiff/grid.hpp"

namespace syncdiff {

/// Purposes a random stream can serve. Distinct purposes never share
/// draws even under equal (seed, a, b).
enum class StreamDomain : std::uint64_t {
  kPanoramaInit = 1,
  kWindowNoise = 2,
  kTraining = 3,
  kDataset = 4,
  kPairs = 5,
  kWeights = 6,
  kProbe = 7,
};

/// Counter-based random stream keyed by (seed, domain, a, b).
///
/// The n-th draw is a pure function of the key and n, so the value a
/// window sees at a timestep does not depend on which thread computed it
/// or in what order windows were visited.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamDomain domain, std::uint64_t a = 0, std::uint64_t b = 0);

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1).
  double uniform();
  /// Standard normal via Box-Muller; consumes two counter values.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  void fill_normal(ImageGrid& grid);
  ImageGrid normal_grid(const Shape& shape);

  /// Number of 64-bit values consumed so far.
  std::uint64_t position() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace syncdiff
