#include <cmath>
#include <set>

#include "doctest.h"
#include "oracle.hpp"
#include "syncdiff/error.hpp"
#include "syncdiff/rng.hpp"
#include "syncdiff/schedule.hpp"

using namespace syncdiff;

TEST_CASE("single-step linear schedule") {
  const Schedule s = build_schedule(1, ScheduleKind::kLinearBeta, 0.5, 0.5);
  REQUIRE(s.steps() == 1);
  CHECK(s.alpha(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.alpha(0) == 1.0);
}

TEST_CASE("two-step linear schedule") {
  const Schedule s = build_schedule(2, ScheduleKind::kLinearBeta, 0.1, 0.3);
  CHECK(std::abs(s.alpha(1) - 0.9) <= 1e-12);
  CHECK(std::abs(s.alpha(2) - 0.63) <= 1e-12);
}

TEST_CASE("fifty-step linear schedule matches a long-double product") {
  const Schedule s = build_schedule(50, ScheduleKind::kLinearBeta, 1e-4, 2e-2);
  const std::vector<double> ref = oracle::linear_alphas(50, 1e-4, 2e-2);
  CHECK(std::abs(s.alpha(1) - 0.9999) <= 1e-12);
  for (int t = 1; t <= 50; ++t) {
    CHECK(oracle::rel_err(s.alpha(t), ref[t - 1]) <= 1e-13);
    CHECK(s.alpha(t) < s.alpha(t - 1));
  }
}

TEST_CASE("default schedule reaches generation quality") {
  const Schedule s = default_schedule();
  CHECK(s.steps() == 1000);
  CHECK(s.is_generation_quality());
  const std::vector<double> ref = oracle::linear_alphas(1000, 1e-4, 2e-2);
  CHECK(oracle::rel_err(s.alpha(1000), ref.back()) <= 1e-10);
}

TEST_CASE("cosine schedules are strictly decreasing") {
  for (int T : {1, 2, 10, 100, 1000}) {
    const Schedule s = build_schedule(T, ScheduleKind::kCosine, 0.008, 0.999);
    for (int t = 1; t <= T; ++t) CHECK(s.alpha(t) < s.alpha(t - 1));
    CHECK(s.alpha(T) > 0.0);
  }
}

TEST_CASE("invalid alpha sequences are rejected") {
  CHECK_THROWS_AS(Schedule::from_alphas({}), ScheduleError);
  CHECK_THROWS_AS(Schedule::from_alphas({0.5, 0.6}), ScheduleError);
  CHECK_THROWS_AS(Schedule::from_alphas({0.5, 0.5}), ScheduleError);
  CHECK_THROWS_AS(Schedule::from_alphas({1.2}), ScheduleError);
  CHECK_THROWS_AS(Schedule::from_alphas({0.5, 0.0}), ScheduleError);
  CHECK_THROWS_AS(Schedule::from_alphas({0.5, NAN}), ScheduleError);
  CHECK_NOTHROW(Schedule::from_alphas({1.0, 0.5}));
  CHECK_THROWS_AS(build_schedule(0, ScheduleKind::kLinearBeta, 0.1, 0.2), ScheduleError);
  CHECK_THROWS_AS(build_schedule(10, ScheduleKind::kLinearBeta, 0.3, 0.2), ScheduleError);
}

TEST_CASE("alpha lookup is bounds checked") {
  const Schedule s = build_schedule(10, ScheduleKind::kLinearBeta, 1e-3, 1e-2);
  CHECK_THROWS_AS(s.alpha(-1), RangeError);
  CHECK_THROWS_AS(s.alpha(11), RangeError);
}

TEST_CASE("add_noise scalar cases") {
  const Shape one{1, 1, 1};
  const Schedule clean = Schedule::from_alphas({1.0, 0.5});
  const ImageGrid x0(one, 0.7);
  CHECK(add_noise(x0, 1, ImageGrid(one, 3.0), clean)[0] == 0.7);

  const Schedule quarter = Schedule::from_alphas({0.25});
  const double v = add_noise(ImageGrid(one, 1.0), 1, ImageGrid(one, 2.0), quarter)[0];
  CHECK(std::abs(v - (0.5 + std::sqrt(0.75) * 2.0)) <= 1e-15);
  CHECK(std::abs(v - 2.2320508) <= 1e-7);

  const double z = add_noise(ImageGrid(one, 0.0), 1, ImageGrid(one, 2.0), quarter)[0];
  CHECK(z == std::sqrt(0.75) * 2.0);
}

TEST_CASE("add_noise with zero noise scales exactly") {
  const Schedule s = default_schedule();
  const ImageGrid x0 = oracle::random_grid({4, 4, 3}, 11);
  const ImageGrid zero(x0.shape());
  for (int t : {1, 17, 500, 999, 1000}) {
    const ImageGrid out = add_noise(x0, t, zero, s);
    const double r = std::sqrt(s.alpha(t));
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == r * x0[i]);
  }
}

TEST_CASE("add_noise variance matches 1 - alpha") {
  const Schedule s = default_schedule();
  const int t = 500;
  const std::size_t N = 100000;
  const Shape shape{1, N, 1};
  const ImageGrid x0(shape, 0.3);
  RngStream rng(5, StreamDomain::kProbe);
  const ImageGrid out = add_noise(x0, t, rng.normal_grid(shape), s);
  double mean = 0.0;
  for (double v : out.values()) mean += v;
  mean /= N;
  double var = 0.0;
  for (double v : out.values()) var += (v - mean) * (v - mean);
  var /= N;
  const double a = s.alpha(t);
  CHECK(std::abs(var - (1 - a)) <= 3 * std::sqrt(2.0 / N) * (1 - a));
  CHECK(std::abs(mean - std::sqrt(a) * 0.3) <= 4 * std::sqrt((1 - a) / N));
}

TEST_CASE("posterior variance examples") {
  const Schedule two = Schedule::from_alphas({0.9, 0.5});
  CHECK(sigma_sq(1, two) == 0.0);
  CHECK(std::abs(sigma_sq(2, two) - (0.1 / 0.5) * (1 - 0.5 / 0.9)) <= 1e-15);
  CHECK(std::abs(sigma_sq(2, two) - 0.0888889) <= 1e-7);

  const Schedule three = Schedule::from_alphas({0.9, 0.5, 0.1});
  CHECK(std::abs(sigma_sq(3, three) - 0.4444444) <= 1e-7);

  CHECK_THROWS_AS(sigma_sq(0, three), RangeError);
  CHECK_THROWS_AS(sigma_sq(4, three), RangeError);
}

TEST_CASE("posterior variance vanishes at t = 1 for every kind") {
  CHECK(sigma_sq(1, default_schedule()) == 0.0);
  CHECK(sigma_sq(1, build_schedule(100, ScheduleKind::kCosine, 0.008, 0.999)) == 0.0);
  const Schedule s = default_schedule();
  for (int t = 2; t <= 1000; ++t) CHECK(sigma_sq(t, s) > 0.0);
}

namespace {

std::vector<int> plan_oracle(int T, int n) {
  // round(T (n - i) / n) with integer half-up rounding, deduplicated.
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    const long num = 2L * T * (n - i) + n;
    const int v = static_cast<int>(num / (2L * n));
    if (out.empty() || out.back() != v) out.push_back(v);
  }
  out.back() = 1;
  return out;
}

}  // namespace

TEST_CASE("full-length plan visits every timestep") {
  const Schedule s = build_schedule(50, ScheduleKind::kLinearBeta, 1e-4, 2e-2);
  const TimestepPlan p = make_plan(s, 50);
  REQUIRE(p.size() == 50);
  for (int i = 0; i < 50; ++i) CHECK(p.steps[i] == 50 - i);
  CHECK(p.next(49) == 0);
}

TEST_CASE("strided plans match an integer-rounding oracle") {
  for (int T : {10, 97, 1000}) {
    for (int n : {1, 2, 3, 7, 20, 50}) {
      if (n > T) continue;
      const Schedule s = build_schedule(T, ScheduleKind::kLinearBeta, 1e-4, 2e-2);
      const TimestepPlan p = make_plan(s, n);
      CHECK(p.steps == plan_oracle(T, n));
      CHECK(p.steps.back() == 1);
      for (std::size_t k = 1; k < p.size(); ++k) CHECK(p.steps[k] < p.steps[k - 1]);
    }
  }
  const TimestepPlan one = make_plan(build_schedule(10, ScheduleKind::kLinearBeta, 1e-3, 1e-2), 1);
  CHECK(one.steps == std::vector<int>{1});
}

TEST_CASE("plan lengths outside [1, T] are rejected") {
  const Schedule s = build_schedule(10, ScheduleKind::kLinearBeta, 1e-3, 1e-2);
  CHECK_THROWS_AS(make_plan(s, 0), RangeError);
  CHECK_THROWS_AS(make_plan(s, 11), RangeError);
}
