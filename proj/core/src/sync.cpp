#include "syncdiff/sync.hpp"

#include <charconv>
#include <cmath>

#include "syncdiff/error.hpp"
#include "syncdiff/parallel.hpp"
#include "syncdiff/rng.hpp"

namespace syncdiff {
namespace {

std::size_t parse_count(const std::string& text, const std::string& whole) {
  std::size_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || v == 0) {
    throw RangeError("bad sync schedule '" + whole + "': count must be a positive integer");
  }
  return v;
}

}  // namespace

SyncSchedule SyncSchedule::parse(const std::string& text) {
  if (text == "every") return every_step();
  const auto colon = text.find(':');
  if (colon != std::string::npos) {
    const std::string head = text.substr(0, colon);
    const std::string tail = text.substr(colon + 1);
    if (head == "interval") return interval(parse_count(tail, text));
    if (head == "initial") return initial(parse_count(tail, text));
  }
  throw RangeError("bad sync schedule '" + text + "' (every | interval:f | initial:k)");
}

bool SyncSchedule::applies(std::size_t index, std::size_t total) const {
  switch (kind) {
    case Kind::kEveryStep:
      return true;
    case Kind::kInitial:
      return index < count;
    case Kind::kInterval: {
      if (count == 0 || total == 0) return false;
      // Smallest j with floor(j * total / count) >= index.
      const std::size_t j = (index * count + total - 1) / total;
      return j < count && (j * total) / count == index;
    }
  }
  return false;
}

std::string to_string(const SyncSchedule& schedule) {
  switch (schedule.kind) {
    case SyncSchedule::Kind::kEveryStep:
      return "every";
    case SyncSchedule::Kind::kInterval:
      return "interval:" + std::to_string(schedule.count);
    case SyncSchedule::Kind::kInitial:
      return "initial:" + std::to_string(schedule.count);
  }
  return "every";
}

std::string to_string(GuidanceTarget target) {
  return target == GuidanceTarget::kDenoised ? "denoised" : "noisy";
}

GuidanceTarget parse_guidance_target(const std::string& name) {
  if (name == "denoised") return GuidanceTarget::kDenoised;
  if (name == "noisy") return GuidanceTarget::kNoisy;
  throw RangeError("unknown guidance target '" + name + "' (denoised | noisy)");
}

void SyncPolicy::validate(std::size_t plan_steps) const {
  if (!(w0 >= 0.0) || !std::isfinite(w0)) throw RangeError("sync weight w0 must be >= 0");
  if (!(decay > 0.0 && decay <= 1.0)) throw RangeError("sync decay must lie in (0, 1]");
  if (schedule.kind != SyncSchedule::Kind::kEveryStep &&
      (schedule.count == 0 || schedule.count > plan_steps)) {
    throw RangeError("sync schedule " + to_string(schedule) + " does not fit a " +
                     std::to_string(plan_steps) + "-step plan");
  }
}

ImageGrid guidance_gradient(const DenoiserModel& model, const ImageGrid& x, int t,
                            const ImageGrid& anchor_denoised, const PerceptualLoss& loss,
                            const Schedule& sched) {
  const ImageGrid phi = denoised_from_eps(x, model.predict_eps(x, t), t, sched);
  const ImageGrid g = loss.grad_a(phi, anchor_denoised);
  const ImageGrid v = model.vjp_eps(x, t, g);
  const double a = sched.alpha(t);
  const double inv = 1.0 / std::sqrt(a);
  return linear_combination(inv, g, -std::sqrt(1.0 - a) * inv, v);
}

SyncResult sync_update(const WindowSet& ws, int t, const DenoiserModel& model,
                       const Schedule& sched, const PerceptualLoss& loss, double weight,
                       const WindowLayout& layout) {
  if (ws.size() != layout.count()) throw DimensionError("sync_update: window count mismatch");
  const std::size_t anchor = layout.anchor();
  const std::size_t n = ws.size();

  const WindowSet eps = model.predict_eps_batch(ws, t);
  WindowSet phi(n);
  parallel_for(n, [&](std::size_t i) { phi[i] = denoised_from_eps(ws[i], eps[i], t, sched); });

  SyncResult result{ws, std::vector<double>(n, 0.0)};
  // Gradient of the loss with respect to each window's prediction; the
  // anchor prediction is a constant target.
  WindowSet g(n);
  parallel_for(n, [&](std::size_t i) {
    if (i == anchor) return;
    if (weight == 0.0) {
      result.losses[i] = loss.value(phi[i], phi[anchor]);
      return;
    }
    LossEvaluation e = loss.value_and_grad(phi[i], phi[anchor]);
    result.losses[i] = e.value;
    g[i] = std::move(e.grad);
  });
  if (weight == 0.0 || n == 1) return result;

  WindowSet xs;
  WindowSet cots;
  xs.reserve(n - 1);
  cots.reserve(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (i == anchor) continue;
    xs.push_back(ws[i]);
    cots.push_back(std::move(g[i]));
  }
  const WindowSet vjp = model.vjp_eps_batch(xs, t, cots);

  const double a = sched.alpha(t);
  const double inv = 1.0 / std::sqrt(a);
  const double noise_scale = std::sqrt(1.0 - a);
  parallel_for(n - 1, [&](std::size_t k) {
    const std::size_t i = k < anchor ? k : k + 1;
    ImageGrid& x = result.windows[i];
    for (std::size_t e = 0; e < x.size(); ++e) {
      const double grad = inv * (cots[k][e] - noise_scale * vjp[k][e]);
      x[e] -= weight * grad;
    }
  });
  return result;
}

SyncResult sync_update_noisy(const WindowSet& ws, const PerceptualLoss& loss, double weight,
                             const WindowLayout& layout) {
  if (ws.size() != layout.count()) throw DimensionError("sync_update: window count mismatch");
  const std::size_t anchor = layout.anchor();
  SyncResult result{ws, std::vector<double>(ws.size(), 0.0)};
  parallel_for(ws.size(), [&](std::size_t i) {
    if (i == anchor) return;
    if (weight == 0.0) {
      result.losses[i] = loss.value(ws[i], ws[anchor]);
      return;
    }
    const LossEvaluation e = loss.value_and_grad(ws[i], ws[anchor]);
    result.losses[i] = e.value;
    ImageGrid& x = result.windows[i];
    for (std::size_t k = 0; k < x.size(); ++k) x[k] -= weight * e.grad[k];
  });
  return result;
}

std::size_t RunTrace::sync_calls() const {
  std::size_t n = 0;
  for (const StepRecord& s : steps) n += s.sync_applied ? 1 : 0;
  return n;
}

RunState denoising_one_step(const RunState& state, const TimestepPlan& plan,
                            const DenoiserModel& model, const Schedule& sched,
                            const SyncPolicy& policy, const WindowLayout& layout,
                            const SamplerKind& kind, StepRecord* record) {
  if (state.step >= plan.size()) throw RangeError("denoising_one_step: plan exhausted");
  const int t = plan.steps[state.step];
  const int s = plan.next(state.step);

  StepRecord rec;
  rec.t = t;
  rec.s = s;
  rec.weight = state.weight;

  const WindowSet* current = &state.windows;
  SyncResult synced;
  if (policy.enabled() && policy.schedule.applies(state.step, plan.size())) {
    synced = policy.target == GuidanceTarget::kDenoised
                 ? sync_update(state.windows, t, model, sched, *policy.loss, state.weight, layout)
                 : sync_update_noisy(state.windows, *policy.loss, state.weight, layout);
    current = &synced.windows;
    rec.sync_applied = true;
    rec.losses = std::move(synced.losses);
  }

  const WindowSet eps = model.predict_eps_batch(*current, t);
  WindowSet sampled(current->size());
  parallel_for(current->size(), [&](std::size_t i) {
    RngStream rng(state.seed, StreamDomain::kWindowNoise, i, static_cast<std::uint64_t>(t));
    sampled[i] = sample_step_from_eps((*current)[i], eps[i], t, s, rng, kind, sched);
  });

  RunState next;
  next.windows = scatter(fuse_average(sampled, layout), layout);
  next.step = state.step + 1;
  next.weight = state.weight * policy.decay;
  next.seed = state.seed;
  if (record) *record = std::move(rec);
  return next;
}

PanoramaResult run_panorama(const PanoramaJob& job) {
  if (!job.model) throw Error("run_panorama: no model");
  if (job.plan.size() == 0) throw RangeError("run_panorama: empty timestep plan");
  job.policy.validate(job.plan.size());

  RngStream init(job.seed, StreamDomain::kPanoramaInit);
  const ImageGrid z_T = init.normal_grid(job.layout.panorama());

  RunState state;
  state.windows = scatter(z_T, job.layout);
  state.weight = job.policy.w0;
  state.seed = job.seed;

  PanoramaResult result;
  result.trace.windows = job.layout.count();
  result.trace.anchor = job.layout.anchor();
  result.trace.steps.reserve(job.plan.size());
  while (state.step < job.plan.size()) {
    StepRecord rec;
    try {
      state = denoising_one_step(state, job.plan, *job.model, job.sched, job.policy, job.layout,
                                 job.sampler, &rec);
    } catch (const Error& e) {
      throw Error("step " + std::to_string(state.step) + " (t=" +
                  std::to_string(job.plan.steps[state.step]) + "): " + e.what());
    }
    result.trace.steps.push_back(std::move(rec));
  }
  result.panorama = fuse_average(state.windows, job.layout);
  return result;
}

}  // namespace syncdiff
