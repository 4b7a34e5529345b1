#include <benchmark/benchmark.h>

#include "syncdiff/losses.hpp"
#include "syncdiff/mlp.hpp"
#include "syncdiff/panorama.hpp"
#include "syncdiff/rng.hpp"
#include "syncdiff/sync.hpp"

using namespace syncdiff;

namespace {

constexpr std::size_t kSide = 32;
constexpr std::size_t kChannels = 3;

WindowLayout toy_layout(std::size_t stride) {
  return make_layout(kSide, kSide + 20 * stride, kChannels, kSide, kSide, stride);
}

WindowSet noise_windows(const WindowLayout& layout, std::uint64_t seed) {
  WindowSet ws;
  for (std::size_t i = 0; i < layout.count(); ++i) {
    ws.push_back(RngStream(seed, StreamDomain::kWindowNoise, i, 0).normal_grid(layout.window()));
  }
  return ws;
}

void BM_FuseAverage(benchmark::State& state) {
  const WindowLayout layout = toy_layout(static_cast<std::size_t>(state.range(0)));
  const WindowSet ws = noise_windows(layout, 1);
  for (auto _ : state) benchmark::DoNotOptimize(fuse_average(ws, layout));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(layout.panorama().size()));
}
BENCHMARK(BM_FuseAverage)->Arg(4)->Arg(8)->Arg(16);

void BM_FeatureLossValueAndGrad(benchmark::State& state) {
  const FeatureLoss loss(FilterBank::random(0, kChannels));
  const Shape shape{kSide, kSide, kChannels};
  const ImageGrid a = RngStream(2, StreamDomain::kPanoramaInit).normal_grid(shape);
  const ImageGrid b = RngStream(3, StreamDomain::kPanoramaInit).normal_grid(shape);
  for (auto _ : state) benchmark::DoNotOptimize(loss.value_and_grad(a, b));
}
BENCHMARK(BM_FeatureLossValueAndGrad)->Unit(benchmark::kMicrosecond);

void BM_MlpBatch(benchmark::State& state) {
  const Shape shape{kSide, kSide, kChannels};
  const MlpDenoiser model = MlpDenoiser::random(shape, {256}, 0, true);
  const WindowSet xs = noise_windows(toy_layout(8), 4);
  const bool reverse = state.range(0) != 0;
  for (auto _ : state) {
    if (reverse) {
      benchmark::DoNotOptimize(model.vjp_eps_batch(xs, 500, xs));
    } else {
      benchmark::DoNotOptimize(model.predict_eps_batch(xs, 500));
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_MlpBatch)->ArgName("vjp")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

void BM_SyncUpdate(benchmark::State& state) {
  const Shape shape{kSide, kSide, kChannels};
  const MlpDenoiser model = MlpDenoiser::random(shape, {256}, 0, true);
  const Schedule sched = default_schedule();
  const FeatureLoss loss(FilterBank::random(0, kChannels), 0.1);
  const WindowLayout layout = toy_layout(8);
  const WindowSet ws = noise_windows(layout, 5);
  for (auto _ : state) benchmark::DoNotOptimize(sync_update(ws, 500, model, sched, loss, 20.0, layout));
}
BENCHMARK(BM_SyncUpdate)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
