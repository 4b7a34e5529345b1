#pragma once

#include <span>

#include "syncdiff/grid.hpp"

namespace syncdiff {

/// Noise-prediction model eps(x_t, t) together with its reverse-mode
/// derivative. Implementations are immutable and safe to share across
/// threads.
class DenoiserModel {
 public:
  virtual ~DenoiserModel() = default;

  virtual ImageGrid predict_eps(const ImageGrid& x, int t) const = 0;

  /// cotangent^T * d eps / d x, evaluated at x.
  virtual ImageGrid vjp_eps(const ImageGrid& x, int t, const ImageGrid& cotangent) const = 0;

  // Batched forms; the defaults map the single-sample versions over the
  // inputs. Models with a cheaper batched path override them.
  virtual WindowSet predict_eps_batch(std::span<const ImageGrid> xs, int t) const;
  virtual WindowSet vjp_eps_batch(std::span<const ImageGrid> xs, int t,
                                  std::span<const ImageGrid> cotangents) const;
};

}  // namespace syncdiff
