#include "syncdiff/metrics.hpp"

#include <cmath>

#include "syncdiff/error.hpp"
#include "syncdiff/parallel.hpp"
#include "syncdiff/rng.hpp"

namespace syncdiff {

std::vector<ImageGrid> split_crops(const ImageGrid& z, std::size_t n_crops) {
  if (n_crops == 0) throw GeometryError("n_crops must be positive");
  if (z.width() % n_crops != 0) {
    throw GeometryError("panorama width " + std::to_string(z.width()) +
                        " does not split into " + std::to_string(n_crops) + " equal crops");
  }
  const std::size_t w = z.width() / n_crops;
  const std::size_t row = w * z.channels();
  std::vector<ImageGrid> crops;
  crops.reserve(n_crops);
  for (std::size_t k = 0; k < n_crops; ++k) {
    ImageGrid c({z.height(), w, z.channels()});
    for (std::size_t y = 0; y < z.height(); ++y) {
      const std::size_t src = z.index(y, k * w, 0);
      const std::size_t dst = c.index(y, 0, 0);
      for (std::size_t e = 0; e < row; ++e) c[dst + e] = z[src + e];
    }
    crops.push_back(std::move(c));
  }
  return crops;
}

IntraMetric intra_metric(const ImageGrid& z, const PerceptualLoss& loss, std::size_t n_crops) {
  if (n_crops < 2) throw GeometryError("intra metric needs at least 2 crops");
  const std::vector<ImageGrid> crops = split_crops(z, n_crops);

  IntraMetric out;
  out.crop_width = z.width() / n_crops;
  for (std::size_t i = 0; i < n_crops; ++i) {
    for (std::size_t j = i + 1; j < n_crops; ++j) out.pairs.push_back({i, j, 0.0});
  }
  parallel_for(out.pairs.size(), [&](std::size_t k) {
    PairValue& p = out.pairs[k];
    p.value = loss.value(crops[p.i], crops[p.j]);
  });
  double sum = 0.0;
  for (const PairValue& p : out.pairs) sum += p.value;
  out.mean = sum / static_cast<double>(out.pairs.size());
  return out;
}

BaselineStats reference_baseline(std::span<const ImageGrid> samples, const PerceptualLoss& loss,
                                 std::size_t n_pairs, std::uint64_t seed) {
  if (samples.size() < 2) throw RangeError("reference baseline needs at least 2 samples");
  if (n_pairs == 0) throw RangeError("reference baseline needs n_pairs >= 1");

  RngStream rng(seed, StreamDomain::kPairs);
  std::vector<std::pair<std::size_t, std::size_t>> picks(n_pairs);
  for (auto& [i, j] : picks) {
    i = rng.below(samples.size());
    j = rng.below(samples.size() - 1);
    if (j >= i) ++j;
  }
  std::vector<double> values(n_pairs);
  parallel_for(n_pairs, [&](std::size_t k) {
    values[k] = loss.value(samples[picks[k].first], samples[picks[k].second]);
  });

  BaselineStats s;
  s.pairs = n_pairs;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(n_pairs);
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(n_pairs));
  return s;
}

MetricsReport evaluate_panorama(const ImageGrid& z, std::span<const PerceptualLoss* const> losses,
                                std::size_t n_crops) {
  MetricsReport r;
  r.panorama = z.shape();
  r.n_crops = n_crops;
  for (const PerceptualLoss* loss : losses) {
    r.losses.push_back({loss->name(), intra_metric(z, *loss, n_crops), std::nullopt});
  }
  r.crop_width = n_crops ? z.width() / n_crops : 0;
  return r;
}

}  // namespace syncdiff
