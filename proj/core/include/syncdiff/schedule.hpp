#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "syncdiff/grid.hpp"

namespace syncdiff {

enum class ScheduleKind { kLinearBeta, kCosine };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& name);

/// Cumulative signal coefficients alpha_1..alpha_T with alpha_0 = 1.
///
/// Follows the cumulative-product convention: x_t = sqrt(alpha_t) x_0 +
/// sqrt(1 - alpha_t) eps, and the per-step beta_t = 1 - alpha_t / alpha_{t-1}.
class Schedule {
 public:
  /// Validates 0 < alpha_T < ... < alpha_1 <= 1; throws ScheduleError.
  static Schedule from_alphas(std::vector<double> alphas);

  int steps() const { return static_cast<int>(alphas_.size()); }
  /// alpha(0) == 1; throws RangeError outside [0, T].
  double alpha(int t) const;
  const std::vector<double>& alphas() const { return alphas_; }

  /// alpha_T small enough that x_T is indistinguishable from unit noise.
  bool is_generation_quality() const { return alphas_.back() <= 0.01; }

 private:
  explicit Schedule(std::vector<double> alphas) : alphas_(std::move(alphas)) {}
  std::vector<double> alphas_;
};

/// linear-beta: params = (beta_min, beta_max).
/// cosine: params = (offset s, beta clip), the squared-cosine cumulative schedule.
Schedule build_schedule(int steps, ScheduleKind kind, double p0, double p1);

/// Default generation schedule: linear-beta(1e-4, 2e-2) over 1000 steps.
Schedule default_schedule();

ImageGrid add_noise(const ImageGrid& x0, int t, const ImageGrid& eps, const Schedule& sched);

/// DDPM posterior variance ((1 - a_{t-1}) / (1 - a_t)) * (1 - a_t / a_{t-1}).
double sigma_sq(int t, const Schedule& sched);

/// Strictly decreasing timesteps visited during reverse sampling; the last
/// entry is always 1, and the step after it emits the clean sample.
struct TimestepPlan {
  std::vector<int> steps;

  std::size_t size() const { return steps.size(); }
  /// Target timestep of the k-th transition (0 after the last entry).
  int next(std::size_t k) const { return k + 1 < steps.size() ? steps[k + 1] : 0; }
};

/// round(T * (1 - i / n)) for i < n, deduplicated, last entry forced to 1.
TimestepPlan make_plan(const Schedule& sched, int n_steps);

}  // namespace syncdiff
