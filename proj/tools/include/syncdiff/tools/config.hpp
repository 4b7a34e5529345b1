#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "syncdiff/denoiser.hpp"
#include "syncdiff/error.hpp"
#include "syncdiff/losses.hpp"
#include "syncdiff/mlp.hpp"
#include "syncdiff/sync.hpp"
#include "syncdiff/tools/dataset.hpp"

namespace syncdiff::tools {

/// Invalid or inconsistent configuration; names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key + ": " + what), key_(key) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

struct ScheduleSpec {
  ScheduleKind kind = ScheduleKind::kLinearBeta;
  int steps = 1000;
  double beta_min = 1e-4;
  double beta_max = 2e-2;
  double cosine_offset = 0.008;
  double cosine_max_beta = 0.999;
};

struct ModelSpec {
  std::string kind = "mlp";  // mlp | gmm
  std::filesystem::path checkpoint;
  std::vector<std::size_t> hidden{128, 128};
  bool gated = true;
  /// gmm: one component per dataset texture, equal weights.
  std::size_t gmm_components = 64;
  double gmm_variance = 0.01;
};

struct LayoutSpec {
  std::size_t height = 32;
  std::size_t width = 192;
  std::size_t channels = 3;
  std::size_t window_width = 32;
  std::size_t stride = 8;
  std::optional<std::size_t> anchor;
};

struct SamplerSpec {
  std::string kind = "ddim";  // ddim | ddpm
  double eta = 0.0;
  int steps = 50;
};

struct SyncSpec {
  bool enabled = true;
  double w0 = 20.0;
  double decay = 0.95;
  std::string schedule = "every";
  std::string target = "denoised";
  std::string loss = "feature";  // feature | style
  double loss_scale = 0.1;
};

struct FeatureSpec {
  std::uint64_t seed = 0;
  std::vector<std::size_t> widths{8, 16, 16};
  std::size_t kernel = 3;
  std::vector<double> lambdas;
};

struct TrainSpec {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t iterations = 5000;
  std::uint64_t seed = 0;
};

struct MetricsSpec {
  std::size_t crops = 6;
  std::size_t reference_samples = 200;
  std::size_t reference_pairs = 1000;
  std::uint64_t reference_seed = 0;
};

struct RunConfig {
  ScheduleSpec schedule;
  ModelSpec model;
  LayoutSpec layout;
  SamplerSpec sampler;
  SyncSpec sync;
  FeatureSpec feature;
  TextureDatasetSpec dataset;
  TrainSpec train;
  MetricsSpec metrics;
  std::uint64_t seed = 0;
  std::filesystem::path output_dir = "out";

  Shape window_shape() const { return {layout.height, layout.window_width, layout.channels}; }
};

/// Accepts a flat object with dotted keys ("sync.w0": 5) or the
/// equivalent nested form. Unknown keys and type mismatches raise
/// ConfigError. Relative paths resolve against `base`.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base = {});
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Cross-field checks against the module contracts; throws ConfigError.
void validate(const RunConfig& config);

Schedule build_schedule(const RunConfig& config);
WindowLayout build_layout(const RunConfig& config);
SamplerKind build_sampler(const RunConfig& config);
TimestepPlan build_plan(const RunConfig& config, const Schedule& sched);
FilterBank build_filter_bank(const RunConfig& config);
std::shared_ptr<const PerceptualLoss> build_guidance_loss(const RunConfig& config);
SyncPolicy build_policy(const RunConfig& config);
/// Loads the checkpoint or assembles the mixture prior.
std::unique_ptr<DenoiserModel> build_model(const RunConfig& config, const Schedule& sched);
MlpDenoiser initial_mlp(const RunConfig& config);

}  // namespace syncdiff::tools
