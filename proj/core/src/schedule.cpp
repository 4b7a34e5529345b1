#include "syncdiff/schedule.hpp"

#include <cmath>
#include <numbers>

#include "syncdiff/error.hpp"

namespace syncdiff {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::kLinearBeta ? "linear-beta" : "cosine";
}

ScheduleKind parse_schedule_kind(const std::string& name) {
  if (name == "linear-beta" || name == "linear") return ScheduleKind::kLinearBeta;
  if (name == "cosine") return ScheduleKind::kCosine;
  throw ScheduleError("unknown schedule kind '" + name + "'");
}

Schedule Schedule::from_alphas(std::vector<double> alphas) {
  if (alphas.empty()) throw ScheduleError("schedule needs at least one timestep");
  double prev = 1.0;
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const double a = alphas[i];
    const bool ok = std::isfinite(a) && a > 0.0 && (i == 0 ? a <= prev : a < prev);
    if (!ok) {
      throw ScheduleError("alpha_" + std::to_string(i + 1) + " = " + std::to_string(a) +
                          " breaks 0 < alpha_T < ... < alpha_1 <= 1");
    }
    prev = a;
  }
  return Schedule(std::move(alphas));
}

double Schedule::alpha(int t) const {
  if (t == 0) return 1.0;
  if (t < 0 || t > steps()) {
    throw RangeError("timestep " + std::to_string(t) + " outside [0, " + std::to_string(steps()) +
                     "]");
  }
  return alphas_[static_cast<std::size_t>(t - 1)];
}

Schedule build_schedule(int steps, ScheduleKind kind, double p0, double p1) {
  if (steps < 1) throw ScheduleError("schedule length must be >= 1");
  std::vector<double> alphas(static_cast<std::size_t>(steps));
  const auto n = static_cast<std::size_t>(steps);

  if (kind == ScheduleKind::kLinearBeta) {
    const double beta_min = p0;
    const double beta_max = p1;
    if (!(beta_min > 0.0 && beta_min <= beta_max && beta_max < 1.0)) {
      throw ScheduleError("linear-beta needs 0 < beta_min <= beta_max < 1");
    }
    double acc = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double frac = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
      const double beta = beta_min + (beta_max - beta_min) * frac;
      acc *= 1.0 - beta;
      alphas[i] = acc;
    }
  } else {
    const double offset = p0;
    const double beta_clip = p1;
    if (!(offset >= 0.0 && beta_clip > 0.0 && beta_clip < 1.0)) {
      throw ScheduleError("cosine needs offset >= 0 and 0 < beta clip < 1");
    }
    auto f = [&](double t) {
      const double c = std::cos((t / static_cast<double>(n) + offset) / (1.0 + offset) *
                                std::numbers::pi / 2.0);
      return c * c;
    };
    double acc = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ratio = f(static_cast<double>(i + 1)) / f(static_cast<double>(i));
      const double beta = std::min(1.0 - ratio, beta_clip);
      acc *= 1.0 - beta;
      alphas[i] = acc;
    }
  }
  return Schedule::from_alphas(std::move(alphas));
}

Schedule default_schedule() { return build_schedule(1000, ScheduleKind::kLinearBeta, 1e-4, 2e-2); }

ImageGrid add_noise(const ImageGrid& x0, int t, const ImageGrid& eps, const Schedule& sched) {
  require_same_shape(x0, eps, "add_noise");
  if (t < 1 || t > sched.steps()) throw RangeError("add_noise: timestep out of range");
  const double a = sched.alpha(t);
  return linear_combination(std::sqrt(a), x0, std::sqrt(1.0 - a), eps);
}

double sigma_sq(int t, const Schedule& sched) {
  if (t < 1 || t > sched.steps()) {
    throw RangeError("sigma_sq: timestep " + std::to_string(t) + " out of range");
  }
  const double a_t = sched.alpha(t);
  const double a_prev = sched.alpha(t - 1);
  return ((1.0 - a_prev) / (1.0 - a_t)) * (1.0 - a_t / a_prev);
}

TimestepPlan make_plan(const Schedule& sched, int n_steps) {
  const int total = sched.steps();
  if (n_steps < 1 || n_steps > total) {
    throw RangeError("plan length " + std::to_string(n_steps) + " outside [1, " +
                     std::to_string(total) + "]");
  }
  TimestepPlan plan;
  for (int i = 0; i < n_steps; ++i) {
    const double v = static_cast<double>(total) *
                     (1.0 - static_cast<double>(i) / static_cast<double>(n_steps));
    const int step = static_cast<int>(std::lround(v));
    if (plan.steps.empty() || step < plan.steps.back()) plan.steps.push_back(step);
  }
  plan.steps.back() = 1;
  return plan;
}

}  // namespace syncdiff
