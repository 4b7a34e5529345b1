#include "syncdiff/rng.hpp"

#include <cmath>
#include <numbers>

namespace syncdiff {
namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// splitmix64 finaliser
std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamDomain domain, std::uint64_t a, std::uint64_t b) {
  std::uint64_t k = mix64(seed + kGamma);
  k = mix64(k ^ (static_cast<std::uint64_t>(domain) * 0xD1B54A32D192ED03ULL));
  k = mix64(k ^ (a * 0xAEF17502108EF2D9ULL + 1));
  k = mix64(k ^ (b * 0xDB4F0B9175AE2165ULL + 2));
  key_ = k;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t n = counter_++;
  return mix64(mix64(n * kGamma + key_) ^ key_);
}

double RngStream::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::below(std::uint64_t n) {
  // Lemire-style rejection keeps the result unbiased.
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t r = next_u64();
    if (r >= threshold) return r % n;
  }
}

void RngStream::fill_normal(ImageGrid& grid) {
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = normal();
}

ImageGrid RngStream::normal_grid(const Shape& shape) {
  ImageGrid g(shape);
  fill_normal(g);
  return g;
}

}  // namespace syncdiff
