#include "syncdiff/denoiser.hpp"

#include "syncdiff/error.hpp"
#include "syncdiff/parallel.hpp"

namespace syncdiff {

WindowSet DenoiserModel::predict_eps_batch(std::span<const ImageGrid> xs, int t) const {
  WindowSet out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = predict_eps(xs[i], t); });
  return out;
}

WindowSet DenoiserModel::vjp_eps_batch(std::span<const ImageGrid> xs, int t,
                                       std::span<const ImageGrid> cotangents) const {
  if (xs.size() != cotangents.size()) {
    throw DimensionError("vjp_eps_batch: input and cotangent counts differ");
  }
  WindowSet out(xs.size());
  parallel_for(xs.size(), [&](std::size_t i) { out[i] = vjp_eps(xs[i], t, cotangents[i]); });
  return out;
}

}  // namespace syncdiff
