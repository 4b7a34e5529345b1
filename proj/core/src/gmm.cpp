#include "syncdiff/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "syncdiff/error.hpp"

namespace syncdiff {
namespace {

// Per-component quantities of the diffused mixture at one point x.
struct Posterior {
  double sqrt_alpha = 0.0;
  std::vector<double> spread;          // a v_k + 1 - a
  std::vector<double> responsibility;  // r_k, sums to 1
  double log_density = 0.0;
};

Posterior posterior(const GaussianMixturePrior& prior, const ImageGrid& x, int t,
                    const Schedule& sched) {
  if (prior.means.empty()) throw DimensionError("gmm: prior has no components");
  require_same_shape(x, prior.means.front(), "gmm: point vs component mean");
  const double a = sched.alpha(t);
  const std::size_t K = prior.components();
  const double dim = static_cast<double>(x.size());

  Posterior p;
  p.sqrt_alpha = std::sqrt(a);
  p.spread.resize(K);
  p.responsibility.resize(K);

  std::vector<double>& logw = p.responsibility;
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const double s = a * prior.variances[k] + (1.0 - a);
    p.spread[k] = s;
    const ImageGrid& mu = prior.means[k];
    double sq = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double d = x[i] - p.sqrt_alpha * mu[i];
      sq += d * d;
    }
    logw[k] = std::log(prior.weights[k]) - 0.5 * dim * std::log(2.0 * std::numbers::pi * s) -
              0.5 * sq / s;
    max_logw = std::max(max_logw, logw[k]);
  }
  double total = 0.0;
  for (double& w : logw) {
    w = std::exp(w - max_logw);
    total += w;
  }
  if (!(total > 0.0) || !std::isfinite(total)) {
    throw NumericError("gmm: responsibilities underflowed");
  }
  for (double& w : logw) w /= total;
  p.log_density = max_logw + std::log(total);
  return p;
}

}  // namespace

void GaussianMixturePrior::validate() const {
  const std::size_t K = weights.size();
  if (K == 0) throw DimensionError("gmm: prior needs at least one component");
  if (means.size() != K || variances.size() != K) {
    throw DimensionError("gmm: weights, means and variances must have equal length");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    if (!(weights[k] > 0.0)) throw NumericError("gmm: component weights must be positive");
    if (!(variances[k] > 0.0)) throw NumericError("gmm: component variances must be positive");
    if (means[k].shape() != means.front().shape()) {
      throw DimensionError("gmm: component means must share one shape");
    }
    total += weights[k];
  }
  if (std::abs(total - 1.0) > 1e-12) throw NumericError("gmm: weights must sum to 1");
}

GaussianMixturePrior GaussianMixturePrior::single(ImageGrid mean, double variance) {
  GaussianMixturePrior prior;
  prior.weights = {1.0};
  prior.means.push_back(std::move(mean));
  prior.variances = {variance};
  prior.validate();
  return prior;
}

double gmm_log_density(const GaussianMixturePrior& prior, const ImageGrid& x, int t,
                       const Schedule& sched) {
  return posterior(prior, x, t, sched).log_density;
}

ImageGrid gmm_predict_eps(const GaussianMixturePrior& prior, const ImageGrid& x, int t,
                          const Schedule& sched) {
  const Posterior p = posterior(prior, x, t, sched);
  const double noise_scale = std::sqrt(1.0 - sched.alpha(t));
  ImageGrid eps(x.shape());
  for (std::size_t k = 0; k < prior.components(); ++k) {
    const double r = p.responsibility[k];
    if (r == 0.0) continue;
    const double c = r / p.spread[k];
    const ImageGrid& mu = prior.means[k];
    for (std::size_t i = 0; i < x.size(); ++i) eps[i] += c * (x[i] - p.sqrt_alpha * mu[i]);
  }
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] *= noise_scale;
  return eps;
}

ImageGrid gmm_vjp_eps(const GaussianMixturePrior& prior, const ImageGrid& x, int t,
                      const ImageGrid& cotangent, const Schedule& sched) {
  require_same_shape(x, cotangent, "gmm_vjp_eps");
  const Posterior p = posterior(prior, x, t, sched);
  const std::size_t n = x.size();

  // Hessian of log p_t applied to u:
  //   H u = sum_k r_k (-u / s_k + g_k (g_k . u)) - gbar (gbar . u),
  // with g_k = -(x - m_k) / s_k and gbar = sum_k r_k g_k.
  ImageGrid hu(x.shape());
  ImageGrid gbar(x.shape());
  double inv_spread = 0.0;
  for (std::size_t k = 0; k < prior.components(); ++k) {
    const double r = p.responsibility[k];
    if (r == 0.0) continue;
    const double s = p.spread[k];
    const ImageGrid& mu = prior.means[k];
    double gu = 0.0;
    for (std::size_t i = 0; i < n; ++i) gu += -(x[i] - p.sqrt_alpha * mu[i]) / s * cotangent[i];
    for (std::size_t i = 0; i < n; ++i) {
      const double g = -(x[i] - p.sqrt_alpha * mu[i]) / s;
      hu[i] += r * g * gu;
      gbar[i] += r * g;
    }
    inv_spread += r / s;
  }
  const double gbar_u = dot(gbar, cotangent);
  const double noise_scale = std::sqrt(1.0 - sched.alpha(t));
  ImageGrid out(x.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double h = hu[i] - inv_spread * cotangent[i] - gbar[i] * gbar_u;
    out[i] = -noise_scale * h;
  }
  return out;
}

GaussianMixtureDenoiser::GaussianMixtureDenoiser(GaussianMixturePrior prior, Schedule sched)
    : prior_(std::move(prior)), sched_(std::move(sched)) {
  prior_.validate();
}

ImageGrid GaussianMixtureDenoiser::predict_eps(const ImageGrid& x, int t) const {
  return gmm_predict_eps(prior_, x, t, sched_);
}

ImageGrid GaussianMixtureDenoiser::vjp_eps(const ImageGrid& x, int t,
                                           const ImageGrid& cotangent) const {
  return gmm_vjp_eps(prior_, x, t, cotangent, sched_);
}

}  // namespace syncdiff
