#include <cmath>
#include <set>

#include "doctest.h"
#include "oracle.hpp"
#include "syncdiff/error.hpp"
#include "syncdiff/metrics.hpp"

using namespace syncdiff;

namespace {

ImageGrid tile(const std::vector<ImageGrid>& crops) {
  const std::size_t H = crops[0].height(), W = crops[0].width(), D = crops[0].channels();
  ImageGrid z({H, W * crops.size(), D});
  for (std::size_t k = 0; k < crops.size(); ++k)
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x)
        for (std::size_t c = 0; c < D; ++c) z.at(y, k * W + x, c) = crops[k].at(y, x, c);
  return z;
}

// Distance between the first entries only; distinct per-sample constants
// make every pair of distinct samples score above zero.
class FirstValueLoss final : public PerceptualLoss {
 public:
  FirstValueLoss() : PerceptualLoss(1.0) {}
  std::string name() const override { return "first"; }
  double value(const ImageGrid& a, const ImageGrid& b) const override { return std::abs(a[0] - b[0]); }
  ImageGrid grad_a(const ImageGrid& a, const ImageGrid&) const override { return ImageGrid(a.shape()); }
};

}  // namespace

TEST_CASE("duplicated tiles score zero") {
  const ImageGrid t = oracle::random_grid({8, 8, 3}, 1);
  const ImageGrid z = tile({t, t, t, t, t, t});
  const StyleLoss style;
  const FeatureLoss feature(FilterBank::random(0, 3, {4, 4}, 3));
  CHECK(intra_metric(z, style, 6).mean == 0.0);
  CHECK(intra_metric(z, feature, 6).mean == 0.0);
}

TEST_CASE("crop pairs are enumerated lexicographically") {
  std::vector<ImageGrid> crops;
  for (std::uint64_t k = 0; k < 6; ++k) crops.push_back(oracle::random_grid({4, 5, 2}, 10 + k));
  const ImageGrid z = tile(crops);
  const StyleLoss loss;
  const IntraMetric m = intra_metric(z, loss, 6);
  CHECK(m.crop_width == 5);
  REQUIRE(m.pairs.size() == 15);
  std::size_t n = 0;
  double sum = 0.0;
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = i + 1; j < 6; ++j, ++n) {
      CHECK(m.pairs[n].i == i);
      CHECK(m.pairs[n].j == j);
      CHECK(m.pairs[n].value == loss.value(crops[i], crops[j]));
      sum += loss.value(crops[i], crops[j]);
    }
  CHECK(oracle::rel_err(m.mean, sum / 15) <= 1e-15);
}

TEST_CASE("two crops score their pair loss") {
  const ImageGrid a = oracle::random_grid({4, 4, 3}, 2);
  const ImageGrid b = oracle::random_grid({4, 4, 3}, 3);
  const StyleLoss loss;
  CHECK(intra_metric(tile({a, b}), loss, 2).mean == loss.value(a, b));
}

TEST_CASE("crop order does not change the mean") {
  std::vector<ImageGrid> crops;
  for (std::uint64_t k = 0; k < 5; ++k) crops.push_back(oracle::random_grid({4, 4, 3}, 20 + k));
  const StyleLoss loss;
  const double m = intra_metric(tile(crops), loss, 5).mean;
  std::vector<ImageGrid> perm{crops[3], crops[0], crops[4], crops[2], crops[1]};
  CHECK(oracle::rel_err(intra_metric(tile(perm), loss, 5).mean, m) <= 1e-14);
}

TEST_CASE("crop geometry checks") {
  const StyleLoss loss;
  const ImageGrid z({4, 10, 1});
  CHECK_THROWS_AS(split_crops(z, 3), GeometryError);
  CHECK_THROWS_AS(intra_metric(z, loss, 3), GeometryError);
  CHECK_THROWS_AS(intra_metric(z, loss, 1), GeometryError);
  CHECK(split_crops(z, 5).size() == 5);
  CHECK(split_crops(z, 5)[0].shape() == Shape{4, 2, 1});
}

TEST_CASE("reference baseline statistics") {
  const StyleLoss style;
  const std::vector<ImageGrid> same(4, oracle::random_grid({4, 4, 3}, 5));
  const BaselineStats zero = reference_baseline(same, style, 50, 0);
  CHECK(zero.mean == 0.0);
  CHECK(zero.std == 0.0);
  CHECK(zero.pairs == 50);

  const std::vector<ImageGrid> two{ImageGrid({1, 1, 1}, 1.0), ImageGrid({1, 1, 1}, 4.0)};
  const FirstValueLoss first;
  const BaselineStats b = reference_baseline(two, first, 30, 1);
  CHECK(b.mean == 3.0);
  CHECK(b.std == 0.0);

  std::vector<ImageGrid> distinct;
  for (int k = 0; k < 10; ++k) distinct.push_back(ImageGrid({1, 1, 1}, k));
  const BaselineStats d = reference_baseline(distinct, first, 500, 2);
  CHECK(d.mean >= 1.0);
  CHECK(d.mean == reference_baseline(distinct, first, 500, 2).mean);
  CHECK(d.mean != reference_baseline(distinct, first, 500, 3).mean);
  CHECK(d.std > 0.0);

  CHECK_THROWS_AS(reference_baseline(std::vector<ImageGrid>{two[0]}, first, 10, 0), RangeError);
  CHECK_THROWS_AS(reference_baseline(two, first, 0, 0), RangeError);
}

TEST_CASE("panorama report lists every loss") {
  const ImageGrid z = oracle::random_grid({8, 48, 3}, 6);
  const StyleLoss style;
  const FeatureLoss feature(FilterBank::random(0, 3, {4, 4}, 3));
  const PerceptualLoss* losses[] = {&style, &feature};
  const MetricsReport r = evaluate_panorama(z, losses, 6);
  CHECK(r.panorama == z.shape());
  CHECK(r.crop_width == 8);
  REQUIRE(r.losses.size() == 2);
  CHECK(r.losses[0].loss == "style");
  CHECK(r.losses[1].loss == "feature");
  CHECK(r.losses[0].intra.mean == intra_metric(z, style, 6).mean);
  CHECK_FALSE(r.losses[0].baseline.has_value());
}
