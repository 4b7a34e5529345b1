#pragma once

#include <vector>

#include "syncdiff/denoiser.hpp"
#include "syncdiff/schedule.hpp"

namespace syncdiff {

/// Isotropic Gaussian mixture over whole grids: component k is
/// N(means[k], variances[k] * I) with weight weights[k].
struct GaussianMixturePrior {
  std::vector<double> weights;
  std::vector<ImageGrid> means;
  std::vector<double> variances;

  std::size_t components() const { return weights.size(); }
  const Shape& shape() const { return means.front().shape(); }

  /// Throws DimensionError / NumericError when the invariants fail:
  /// equal-length component lists, common mean shape, weights > 0 that
  /// sum to 1 within 1e-12, variances > 0.
  void validate() const;

  /// Single component N(mean, variance * I).
  static GaussianMixturePrior single(ImageGrid mean, double variance);
};

/// log p_t(x) for the diffused mixture (means sqrt(a) mu_k, variances
/// a v_k + 1 - a), evaluated with log-sum-exp.
double gmm_log_density(const GaussianMixturePrior& prior, const ImageGrid& x, int t,
                       const Schedule& sched);

/// Optimal noise prediction -sqrt(1 - a_t) * grad log p_t(x).
ImageGrid gmm_predict_eps(const GaussianMixturePrior& prior, const ImageGrid& x, int t,
                          const Schedule& sched);

/// Exact cotangent-Jacobian product of gmm_predict_eps.
ImageGrid gmm_vjp_eps(const GaussianMixturePrior& prior, const ImageGrid& x, int t,
                      const ImageGrid& cotangent, const Schedule& sched);

class GaussianMixtureDenoiser final : public DenoiserModel {
 public:
  GaussianMixtureDenoiser(GaussianMixturePrior prior, Schedule sched);

  ImageGrid predict_eps(const ImageGrid& x, int t) const override;
  ImageGrid vjp_eps(const ImageGrid& x, int t, const ImageGrid& cotangent) const override;

  const GaussianMixturePrior& prior() const { return prior_; }

 private:
  GaussianMixturePrior prior_;
  Schedule sched_;
};

}  // namespace syncdiff
