#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "syncdiff/denoiser.hpp"
#include "syncdiff/losses.hpp"
#include "syncdiff/panorama.hpp"
#include "syncdiff/samplers.hpp"
#include "syncdiff/schedule.hpp"

namespace syncdiff {

/// Which reverse steps run the synchronisation update.
struct SyncSchedule {
  enum class Kind { kEveryStep, kInterval, kInitial };
  Kind kind = Kind::kEveryStep;
  /// f for kInterval (total applications, evenly spaced), k for kInitial.
  std::size_t count = 0;

  static SyncSchedule every_step() { return {Kind::kEveryStep, 0}; }
  static SyncSchedule interval(std::size_t f) { return {Kind::kInterval, f}; }
  static SyncSchedule initial(std::size_t k) { return {Kind::kInitial, k}; }
  /// "every", "interval:f" or "initial:k".
  static SyncSchedule parse(const std::string& text);

  /// Whether step `index` (0-based) of a `total`-step plan synchronises.
  /// interval(f) fires on floor(j * total / f) for j < f.
  bool applies(std::size_t index, std::size_t total) const;
};

std::string to_string(const SyncSchedule& schedule);

enum class GuidanceTarget {
  kDenoised,  // loss between predicted clean samples, differentiated through the model
  kNoisy,     // loss between the noisy windows themselves
};

std::string to_string(GuidanceTarget target);
GuidanceTarget parse_guidance_target(const std::string& name);

struct SyncPolicy {
  double w0 = 0.0;
  double decay = 0.95;
  SyncSchedule schedule = SyncSchedule::every_step();
  GuidanceTarget target = GuidanceTarget::kDenoised;
  /// Null disables synchronisation entirely (plain averaging fusion).
  std::shared_ptr<const PerceptualLoss> loss;

  bool enabled() const { return loss != nullptr; }
  /// Throws RangeError when w0 < 0, decay outside (0, 1], or the schedule
  /// count is zero or exceeds the plan length.
  void validate(std::size_t plan_steps) const;

  static SyncPolicy multidiffusion() { return {}; }
};

struct SyncResult {
  WindowSet windows;
  /// Guidance loss of each window against the anchor (0 for the anchor).
  std::vector<double> losses;
};

/// Gradient with respect to x of loss(denoised(x, t), anchor_denoised),
/// with the anchor prediction held constant:
///   (g - sqrt(1 - a_t) * vjp_eps(x, t, g)) / sqrt(a_t),
/// where g = loss.grad_a(denoised(x, t), anchor_denoised).
ImageGrid guidance_gradient(const DenoiserModel& model, const ImageGrid& x, int t,
                            const ImageGrid& anchor_denoised, const PerceptualLoss& loss,
                            const Schedule& sched);

/// One gradient-descent step of every non-anchor window toward the
/// anchor, measured on predicted clean samples. The anchor is returned
/// unchanged; weight 0 returns every window unchanged.
SyncResult sync_update(const WindowSet& ws, int t, const DenoiserModel& model,
                       const Schedule& sched, const PerceptualLoss& loss, double weight,
                       const WindowLayout& layout);

/// Ablation: the same update with the loss evaluated on the noisy windows.
SyncResult sync_update_noisy(const WindowSet& ws, const PerceptualLoss& loss, double weight,
                             const WindowLayout& layout);

struct RunState {
  WindowSet windows;
  /// Index into the timestep plan of the next step to run.
  std::size_t step = 0;
  /// Guidance weight for the next step: w0 * decay^step.
  double weight = 0.0;
  std::uint64_t seed = 0;
};

struct StepRecord {
  int t = 0;
  int s = 0;
  double weight = 0.0;
  bool sync_applied = false;
  std::vector<double> losses;
};

struct RunTrace {
  std::size_t windows = 0;
  std::size_t anchor = 0;
  std::vector<StepRecord> steps;

  std::size_t sync_calls() const;
};

/// One joint reverse step: synchronise (when scheduled), sample every
/// window from t to s with its own noise stream keyed by (seed, window,
/// t), average in panorama space and crop back, then decay the weight.
/// The decay applies whether or not the step synchronised.
RunState denoising_one_step(const RunState& state, const TimestepPlan& plan,
                            const DenoiserModel& model, const Schedule& sched,
                            const SyncPolicy& policy, const WindowLayout& layout,
                            const SamplerKind& kind, StepRecord* record = nullptr);

struct PanoramaJob {
  const DenoiserModel* model = nullptr;
  Schedule sched = default_schedule();
  TimestepPlan plan;
  WindowLayout layout;
  SamplerKind sampler = SamplerKind::ddim(0.0);
  SyncPolicy policy;
  std::uint64_t seed = 0;
};

struct PanoramaResult {
  ImageGrid panorama;
  RunTrace trace;
};

/// Draws one panorama-wide unit Gaussian, crops it into windows and runs
/// the joint reverse process over the plan.
PanoramaResult run_panorama(const PanoramaJob& job);

}  // namespace syncdiff
