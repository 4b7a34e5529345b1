#pragma once

#include <string>

#include "syncdiff/denoiser.hpp"
#include "syncdiff/rng.hpp"
#include "syncdiff/schedule.hpp"

namespace syncdiff {

struct SamplerKind {
  enum class Variant { kDdpm, kDdim };
  Variant variant = Variant::kDdim;
  /// DDIM stochasticity in [0, 1]; ignored for DDPM.
  double eta = 0.0;

  static SamplerKind ddpm() { return {Variant::kDdpm, 1.0}; }
  static SamplerKind ddim(double eta = 0.0);
};

std::string to_string(const SamplerKind& kind);

/// Predicted clean sample (x_t - sqrt(1 - a_t) eps) / sqrt(a_t).
ImageGrid predict_denoised(const DenoiserModel& model, const ImageGrid& x, int t,
                           const Schedule& sched);
ImageGrid denoised_from_eps(const ImageGrid& x, const ImageGrid& eps, int t,
                            const Schedule& sched);

/// Ancestral DDPM transition t -> t-1. At t = 1 the variance is zero and
/// the noise argument has no effect.
ImageGrid ddpm_step(const DenoiserModel& model, const ImageGrid& x, int t, const ImageGrid& noise,
                    const Schedule& sched);
ImageGrid ddpm_step_from_eps(const ImageGrid& x, const ImageGrid& eps, int t,
                             const ImageGrid& noise, const Schedule& sched);

/// DDIM noise scale for the jump t -> s:
/// eta * sqrt((1 - a_s) / (1 - a_t)) * sqrt(1 - a_t / a_s). Zero when s = 0.
double ddim_sigma(int t, int s, double eta, const Schedule& sched);

/// DDIM transition t -> s (s < t). s = 0 returns the predicted clean sample.
ImageGrid ddim_step(const DenoiserModel& model, const ImageGrid& x, int t, int s,
                    const ImageGrid& noise, const Schedule& sched, double eta);
ImageGrid ddim_step_from_eps(const ImageGrid& x, const ImageGrid& eps, int t, int s,
                             const ImageGrid& noise, const Schedule& sched, double eta);

/// Transition t -> s drawing noise from rng only when the step is
/// stochastic, so a deterministic step leaves the stream position alone.
/// DDPM requires s = t - 1.
ImageGrid sample_step(const DenoiserModel& model, const ImageGrid& x, int t, int s, RngStream& rng,
                      const SamplerKind& kind, const Schedule& sched);
ImageGrid sample_step_from_eps(const ImageGrid& x, const ImageGrid& eps, int t, int s,
                               RngStream& rng, const SamplerKind& kind, const Schedule& sched);

}  // namespace syncdiff
