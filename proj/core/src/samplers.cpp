#include "syncdiff/samplers.hpp"

#include <cmath>

#include "syncdiff/error.hpp"

namespace syncdiff {
namespace {

void check_timestep(int t, const Schedule& sched, const char* what) {
  if (t < 1 || t > sched.steps()) {
    throw RangeError(std::string(what) + ": timestep " + std::to_string(t) + " outside [1, " +
                     std::to_string(sched.steps()) + "]");
  }
}

}  // namespace

SamplerKind SamplerKind::ddim(double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw RangeError("ddim eta must lie in [0, 1]");
  return {Variant::kDdim, eta};
}

std::string to_string(const SamplerKind& kind) {
  if (kind.variant == SamplerKind::Variant::kDdpm) return "ddpm";
  return "ddim(eta=" + std::to_string(kind.eta) + ")";
}

ImageGrid denoised_from_eps(const ImageGrid& x, const ImageGrid& eps, int t,
                            const Schedule& sched) {
  check_timestep(t, sched, "predict_denoised");
  const double a = sched.alpha(t);
  const double inv = 1.0 / std::sqrt(a);
  return linear_combination(inv, x, -std::sqrt(1.0 - a) * inv, eps);
}

ImageGrid predict_denoised(const DenoiserModel& model, const ImageGrid& x, int t,
                           const Schedule& sched) {
  check_timestep(t, sched, "predict_denoised");
  return denoised_from_eps(x, model.predict_eps(x, t), t, sched);
}

ImageGrid ddpm_step_from_eps(const ImageGrid& x, const ImageGrid& eps, int t,
                             const ImageGrid& noise, const Schedule& sched) {
  check_timestep(t, sched, "ddpm_step");
  require_same_shape(x, eps, "ddpm_step");
  require_same_shape(x, noise, "ddpm_step");
  const double a_t = sched.alpha(t);
  const double a_prev = sched.alpha(t - 1);
  const double scale = std::sqrt(a_prev / a_t);
  const double eps_coef = (1.0 - a_t / a_prev) / std::sqrt(1.0 - a_t);
  const double sigma = std::sqrt(sigma_sq(t, sched));
  ImageGrid out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = scale * (x[i] - eps_coef * eps[i]) + sigma * noise[i];
  }
  return out;
}

ImageGrid ddpm_step(const DenoiserModel& model, const ImageGrid& x, int t, const ImageGrid& noise,
                    const Schedule& sched) {
  check_timestep(t, sched, "ddpm_step");
  return ddpm_step_from_eps(x, model.predict_eps(x, t), t, noise, sched);
}

double ddim_sigma(int t, int s, double eta, const Schedule& sched) {
  const double a_t = sched.alpha(t);
  const double a_s = sched.alpha(s);
  return eta * std::sqrt((1.0 - a_s) / (1.0 - a_t)) * std::sqrt(1.0 - a_t / a_s);
}

ImageGrid ddim_step_from_eps(const ImageGrid& x, const ImageGrid& eps, int t, int s,
                             const ImageGrid& noise, const Schedule& sched, double eta) {
  check_timestep(t, sched, "ddim_step");
  if (s < 0 || s >= t) {
    throw RangeError("ddim_step: target " + std::to_string(s) + " must satisfy 0 <= s < t");
  }
  ImageGrid x0 = denoised_from_eps(x, eps, t, sched);
  if (s == 0) return x0;

  require_same_shape(x, noise, "ddim_step");
  const double a_t = sched.alpha(t);
  const double a_s = sched.alpha(s);
  const double sigma = ddim_sigma(t, s, eta, sched);
  const double dir_var = 1.0 - a_s - sigma * sigma;
  if (dir_var < 0.0) throw VarianceError("ddim_step: 1 - a_s - sigma^2 < 0");
  const double dir = std::sqrt(dir_var);
  const double sqrt_a_t = std::sqrt(a_t);
  const double sqrt_a_s = std::sqrt(a_s);
  const double inv_noise = 1.0 / std::sqrt(1.0 - a_t);
  ImageGrid out(x.shape());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double implied_eps = (x[i] - sqrt_a_t * x0[i]) * inv_noise;
    out[i] = sqrt_a_s * x0[i] + dir * implied_eps + sigma * noise[i];
  }
  return out;
}

ImageGrid ddim_step(const DenoiserModel& model, const ImageGrid& x, int t, int s,
                    const ImageGrid& noise, const Schedule& sched, double eta) {
  check_timestep(t, sched, "ddim_step");
  return ddim_step_from_eps(x, model.predict_eps(x, t), t, s, noise, sched, eta);
}

ImageGrid sample_step_from_eps(const ImageGrid& x, const ImageGrid& eps, int t, int s,
                               RngStream& rng, const SamplerKind& kind, const Schedule& sched) {
  check_timestep(t, sched, "sample_step");
  if (kind.variant == SamplerKind::Variant::kDdpm) {
    if (s != t - 1) {
      throw UnsupportedTransitionError("DDPM only supports adjacent steps, got " +
                                       std::to_string(t) + " -> " + std::to_string(s));
    }
    const ImageGrid noise = sigma_sq(t, sched) > 0.0 ? rng.normal_grid(x.shape()) : ImageGrid(x.shape());
    return ddpm_step_from_eps(x, eps, t, noise, sched);
  }
  if (!(kind.eta >= 0.0 && kind.eta <= 1.0)) throw RangeError("ddim eta must lie in [0, 1]");
  if (s < 0 || s >= t) throw RangeError("sample_step: target must satisfy 0 <= s < t");
  const bool stochastic = s > 0 && ddim_sigma(t, s, kind.eta, sched) > 0.0;
  const ImageGrid noise = stochastic ? rng.normal_grid(x.shape()) : ImageGrid(x.shape());
  return ddim_step_from_eps(x, eps, t, s, noise, sched, kind.eta);
}

ImageGrid sample_step(const DenoiserModel& model, const ImageGrid& x, int t, int s, RngStream& rng,
                      const SamplerKind& kind, const Schedule& sched) {
  check_timestep(t, sched, "sample_step");
  return sample_step_from_eps(x, model.predict_eps(x, t), t, s, rng, kind, sched);
}

}  // namespace syncdiff
