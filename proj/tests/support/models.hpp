#pragma once

// Closed-form noise predictors used as oracles.

#include <cmath>

#include "syncdiff/denoiser.hpp"
#include "syncdiff/schedule.hpp"

namespace oracle {

/// Returns the same grid for every input.
class ConstantEps final : public syncdiff::DenoiserModel {
 public:
  explicit ConstantEps(syncdiff::ImageGrid eps) : eps_(std::move(eps)) {}
  syncdiff::ImageGrid predict_eps(const syncdiff::ImageGrid&, int) const override { return eps_; }
  syncdiff::ImageGrid vjp_eps(const syncdiff::ImageGrid& x, int,
                              const syncdiff::ImageGrid&) const override {
    return syncdiff::ImageGrid(x.shape());
  }

 private:
  syncdiff::ImageGrid eps_;
};

/// Exact noise prediction for a point-mass prior at mu:
///   eps(x, t) = (x - sqrt(a_t) mu) / sqrt(1 - a_t).
/// Affine in x, and constant along every forward trajectory.
class PointMassEps final : public syncdiff::DenoiserModel {
 public:
  PointMassEps(syncdiff::ImageGrid mu, syncdiff::Schedule sched)
      : mu_(std::move(mu)), sched_(std::move(sched)) {}
  syncdiff::ImageGrid predict_eps(const syncdiff::ImageGrid& x, int t) const override {
    const double a = sched_.alpha(t);
    syncdiff::ImageGrid out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
      out[i] = (x[i] - std::sqrt(a) * mu_[i]) / std::sqrt(1.0 - a);
    }
    return out;
  }
  syncdiff::ImageGrid vjp_eps(const syncdiff::ImageGrid& x, int t,
                              const syncdiff::ImageGrid& u) const override {
    const double c = 1.0 / std::sqrt(1.0 - sched_.alpha(t));
    syncdiff::ImageGrid out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * u[i];
    return out;
  }

 private:
  syncdiff::ImageGrid mu_;
  syncdiff::Schedule sched_;
};

}  // namespace oracle
