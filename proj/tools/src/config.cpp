#include "syncdiff/tools/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "syncdiff/gmm.hpp"

namespace syncdiff::tools {
namespace {

using nlohmann::json;

void flatten(const json& node, const std::string& prefix, std::map<std::string, json>& out) {
  if (node.is_object() && (prefix.empty() || !node.empty())) {
    for (const auto& [k, v] : node.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  out[prefix] = node;
}

template <typename T>
T as(const std::string& key, const json& v) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(key, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(key, "expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.get<long long>() < 0) throw ConfigError(key, "must be non-negative");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw ConfigError(key, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(key, "expected a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(key, e.what());
  }
}

template <typename T>
std::vector<T> as_list(const std::string& key, const json& v) {
  if (!v.is_array()) throw ConfigError(key, "expected an array");
  std::vector<T> out;
  for (const json& e : v) out.push_back(as<T>(key, e));
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_relative() && !base.empty() ? base / path : path;
}

template <typename Fn>
auto wrap(const std::string& key, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(key, e.what());
  }
}

}  // namespace

RunConfig parse_config(const json& doc, const std::filesystem::path& base) {
  if (!doc.is_object()) throw ConfigError("<root>", "config must be a JSON object");
  std::map<std::string, json> flat;
  flatten(doc, "", flat);

  RunConfig c;
  using Setter = std::function<void(const std::string&, const json&)>;
  const std::map<std::string, Setter> setters = {
      {"schedule.kind", [&](auto& k, auto& v) {
         c.schedule.kind = wrap(k, [&] { return parse_schedule_kind(as<std::string>(k, v)); });
       }},
      {"schedule.steps", [&](auto& k, auto& v) { c.schedule.steps = as<int>(k, v); }},
      {"schedule.beta_min", [&](auto& k, auto& v) { c.schedule.beta_min = as<double>(k, v); }},
      {"schedule.beta_max", [&](auto& k, auto& v) { c.schedule.beta_max = as<double>(k, v); }},
      {"schedule.cosine_offset", [&](auto& k, auto& v) { c.schedule.cosine_offset = as<double>(k, v); }},
      {"schedule.cosine_max_beta",
       [&](auto& k, auto& v) { c.schedule.cosine_max_beta = as<double>(k, v); }},
      {"model.kind", [&](auto& k, auto& v) { c.model.kind = as<std::string>(k, v); }},
      {"model.checkpoint",
       [&](auto& k, auto& v) { c.model.checkpoint = resolve(base, as<std::string>(k, v)); }},
      {"model.hidden", [&](auto& k, auto& v) { c.model.hidden = as_list<std::size_t>(k, v); }},
      {"model.gated", [&](auto& k, auto& v) { c.model.gated = as<bool>(k, v); }},
      {"model.gmm_components",
       [&](auto& k, auto& v) { c.model.gmm_components = as<std::size_t>(k, v); }},
      {"model.gmm_variance", [&](auto& k, auto& v) { c.model.gmm_variance = as<double>(k, v); }},
      {"layout.height", [&](auto& k, auto& v) { c.layout.height = as<std::size_t>(k, v); }},
      {"layout.width", [&](auto& k, auto& v) { c.layout.width = as<std::size_t>(k, v); }},
      {"layout.channels", [&](auto& k, auto& v) { c.layout.channels = as<std::size_t>(k, v); }},
      {"layout.window_width",
       [&](auto& k, auto& v) { c.layout.window_width = as<std::size_t>(k, v); }},
      {"layout.stride", [&](auto& k, auto& v) { c.layout.stride = as<std::size_t>(k, v); }},
      {"layout.anchor", [&](auto& k, auto& v) {
         if (v.is_string() && v.template get<std::string>() == "center") {
           c.layout.anchor.reset();
         } else {
           c.layout.anchor = as<std::size_t>(k, v);
         }
       }},
      {"sampler.kind", [&](auto& k, auto& v) { c.sampler.kind = as<std::string>(k, v); }},
      {"sampler.eta", [&](auto& k, auto& v) { c.sampler.eta = as<double>(k, v); }},
      {"sampler.steps", [&](auto& k, auto& v) { c.sampler.steps = as<int>(k, v); }},
      {"sync.enabled", [&](auto& k, auto& v) { c.sync.enabled = as<bool>(k, v); }},
      {"sync.w0", [&](auto& k, auto& v) { c.sync.w0 = as<double>(k, v); }},
      {"sync.decay", [&](auto& k, auto& v) { c.sync.decay = as<double>(k, v); }},
      {"sync.schedule", [&](auto& k, auto& v) { c.sync.schedule = as<std::string>(k, v); }},
      {"sync.target", [&](auto& k, auto& v) { c.sync.target = as<std::string>(k, v); }},
      {"sync.loss", [&](auto& k, auto& v) { c.sync.loss = as<std::string>(k, v); }},
      {"sync.loss_scale", [&](auto& k, auto& v) { c.sync.loss_scale = as<double>(k, v); }},
      {"feature.seed", [&](auto& k, auto& v) { c.feature.seed = as<std::uint64_t>(k, v); }},
      {"feature.widths", [&](auto& k, auto& v) { c.feature.widths = as_list<std::size_t>(k, v); }},
      {"feature.kernel", [&](auto& k, auto& v) { c.feature.kernel = as<std::size_t>(k, v); }},
      {"feature.lambdas", [&](auto& k, auto& v) { c.feature.lambdas = as_list<double>(k, v); }},
      {"dataset.count", [&](auto& k, auto& v) { c.dataset.count = as<std::size_t>(k, v); }},
      {"dataset.seed", [&](auto& k, auto& v) { c.dataset.seed = as<std::uint64_t>(k, v); }},
      {"dataset.orientation_min",
       [&](auto& k, auto& v) { c.dataset.orientation_min = as<double>(k, v); }},
      {"dataset.orientation_max",
       [&](auto& k, auto& v) { c.dataset.orientation_max = as<double>(k, v); }},
      {"dataset.frequency_min",
       [&](auto& k, auto& v) { c.dataset.frequency_min = as<double>(k, v); }},
      {"dataset.frequency_max",
       [&](auto& k, auto& v) { c.dataset.frequency_max = as<double>(k, v); }},
      {"dataset.palette_range",
       [&](auto& k, auto& v) { c.dataset.palette_range = as<double>(k, v); }},
      {"train.learning_rate", [&](auto& k, auto& v) { c.train.learning_rate = as<double>(k, v); }},
      {"train.batch_size", [&](auto& k, auto& v) { c.train.batch_size = as<std::size_t>(k, v); }},
      {"train.iterations", [&](auto& k, auto& v) { c.train.iterations = as<std::size_t>(k, v); }},
      {"train.seed", [&](auto& k, auto& v) { c.train.seed = as<std::uint64_t>(k, v); }},
      {"metrics.crops", [&](auto& k, auto& v) { c.metrics.crops = as<std::size_t>(k, v); }},
      {"metrics.reference_samples",
       [&](auto& k, auto& v) { c.metrics.reference_samples = as<std::size_t>(k, v); }},
      {"metrics.reference_pairs",
       [&](auto& k, auto& v) { c.metrics.reference_pairs = as<std::size_t>(k, v); }},
      {"metrics.reference_seed",
       [&](auto& k, auto& v) { c.metrics.reference_seed = as<std::uint64_t>(k, v); }},
      {"seed", [&](auto& k, auto& v) { c.seed = as<std::uint64_t>(k, v); }},
      {"output.dir",
       [&](auto& k, auto& v) { c.output_dir = resolve(base, as<std::string>(k, v)); }},
  };
  for (const auto& [key, value] : flat) {
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError(key, "unknown configuration key");
    it->second(key, value);
  }
  c.dataset.shape = c.window_shape();
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot open '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("--config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(doc, path.parent_path());
}

json to_json(const RunConfig& c) {
  json j;
  j["schedule.kind"] = to_string(c.schedule.kind);
  j["schedule.steps"] = c.schedule.steps;
  j["schedule.beta_min"] = c.schedule.beta_min;
  j["schedule.beta_max"] = c.schedule.beta_max;
  j["schedule.cosine_offset"] = c.schedule.cosine_offset;
  j["schedule.cosine_max_beta"] = c.schedule.cosine_max_beta;
  j["model.kind"] = c.model.kind;
  j["model.checkpoint"] = c.model.checkpoint.string();
  j["model.hidden"] = c.model.hidden;
  j["model.gated"] = c.model.gated;
  j["model.gmm_components"] = c.model.gmm_components;
  j["model.gmm_variance"] = c.model.gmm_variance;
  j["layout.height"] = c.layout.height;
  j["layout.width"] = c.layout.width;
  j["layout.channels"] = c.layout.channels;
  j["layout.window_width"] = c.layout.window_width;
  j["layout.stride"] = c.layout.stride;
  j["layout.anchor"] = c.layout.anchor ? json(*c.layout.anchor) : json("center");
  j["sampler.kind"] = c.sampler.kind;
  j["sampler.eta"] = c.sampler.eta;
  j["sampler.steps"] = c.sampler.steps;
  j["sync.enabled"] = c.sync.enabled;
  j["sync.w0"] = c.sync.w0;
  j["sync.decay"] = c.sync.decay;
  j["sync.schedule"] = c.sync.schedule;
  j["sync.target"] = c.sync.target;
  j["sync.loss"] = c.sync.loss;
  j["sync.loss_scale"] = c.sync.loss_scale;
  j["feature.seed"] = c.feature.seed;
  j["feature.widths"] = c.feature.widths;
  j["feature.kernel"] = c.feature.kernel;
  j["feature.lambdas"] = c.feature.lambdas;
  j["dataset.count"] = c.dataset.count;
  j["dataset.seed"] = c.dataset.seed;
  j["dataset.orientation_min"] = c.dataset.orientation_min;
  j["dataset.orientation_max"] = c.dataset.orientation_max;
  j["dataset.frequency_min"] = c.dataset.frequency_min;
  j["dataset.frequency_max"] = c.dataset.frequency_max;
  j["dataset.palette_range"] = c.dataset.palette_range;
  j["train.learning_rate"] = c.train.learning_rate;
  j["train.batch_size"] = c.train.batch_size;
  j["train.iterations"] = c.train.iterations;
  j["train.seed"] = c.train.seed;
  j["metrics.crops"] = c.metrics.crops;
  j["metrics.reference_samples"] = c.metrics.reference_samples;
  j["metrics.reference_pairs"] = c.metrics.reference_pairs;
  j["metrics.reference_seed"] = c.metrics.reference_seed;
  j["seed"] = c.seed;
  j["output.dir"] = c.output_dir.string();
  return j;
}

void validate(const RunConfig& c) {
  const Schedule sched = build_schedule(c);
  build_layout(c);
  build_sampler(c);
  build_plan(c, sched);
  build_policy(c).validate(static_cast<std::size_t>(c.sampler.steps));
  wrap("dataset", [&] { c.dataset.validate(); });
  if (c.model.kind != "mlp" && c.model.kind != "gmm") {
    throw ConfigError("model.kind", "expected mlp or gmm, got '" + c.model.kind + "'");
  }
  if (c.model.kind == "gmm") {
    if (c.model.gmm_components == 0) throw ConfigError("model.gmm_components", "must be positive");
    if (!(c.model.gmm_variance > 0.0)) throw ConfigError("model.gmm_variance", "must be positive");
  }
  if (c.train.batch_size == 0) throw ConfigError("train.batch_size", "must be positive");
  if (!(c.train.learning_rate > 0.0)) throw ConfigError("train.learning_rate", "must be positive");
  if (c.metrics.crops < 2 || c.layout.width % c.metrics.crops != 0) {
    throw ConfigError("metrics.crops", "must be >= 2 and divide layout.width " +
                                           std::to_string(c.layout.width));
  }
  build_filter_bank(c);
}

Schedule build_schedule(const RunConfig& c) {
  return wrap("schedule", [&] {
    return c.schedule.kind == ScheduleKind::kLinearBeta
               ? syncdiff::build_schedule(c.schedule.steps, c.schedule.kind, c.schedule.beta_min,
                                          c.schedule.beta_max)
               : syncdiff::build_schedule(c.schedule.steps, c.schedule.kind,
                                          c.schedule.cosine_offset, c.schedule.cosine_max_beta);
  });
}

WindowLayout build_layout(const RunConfig& c) {
  return wrap("layout", [&] {
    return make_layout(c.layout.height, c.layout.width, c.layout.channels, c.layout.height,
                       c.layout.window_width, c.layout.stride,
                       c.layout.anchor ? AnchorChoice::at(*c.layout.anchor) : AnchorChoice::center());
  });
}

SamplerKind build_sampler(const RunConfig& c) {
  if (c.sampler.kind == "ddpm") {
    if (c.sampler.steps != c.schedule.steps) {
      throw ConfigError("sampler.steps", "ddpm visits every timestep; must equal schedule.steps");
    }
    return SamplerKind::ddpm();
  }
  if (c.sampler.kind == "ddim") return wrap("sampler.eta", [&] { return SamplerKind::ddim(c.sampler.eta); });
  throw ConfigError("sampler.kind", "expected ddim or ddpm, got '" + c.sampler.kind + "'");
}

TimestepPlan build_plan(const RunConfig& c, const Schedule& sched) {
  return wrap("sampler.steps", [&] { return make_plan(sched, c.sampler.steps); });
}

FilterBank build_filter_bank(const RunConfig& c) {
  return wrap("feature", [&] {
    return FilterBank::random(c.feature.seed, c.layout.channels, c.feature.widths,
                              c.feature.kernel, c.feature.lambdas);
  });
}

std::shared_ptr<const PerceptualLoss> build_guidance_loss(const RunConfig& c) {
  return wrap("sync.loss_scale", [&]() -> std::shared_ptr<const PerceptualLoss> {
    if (c.sync.loss == "style") return std::make_shared<StyleLoss>(c.sync.loss_scale);
    if (c.sync.loss == "feature") {
      return std::make_shared<FeatureLoss>(build_filter_bank(c), c.sync.loss_scale);
    }
    throw ConfigError("sync.loss", "expected style or feature, got '" + c.sync.loss + "'");
  });
}

SyncPolicy build_policy(const RunConfig& c) {
  SyncPolicy p;
  if (!c.sync.enabled) return SyncPolicy::multidiffusion();
  p.w0 = c.sync.w0;
  p.decay = c.sync.decay;
  p.schedule = wrap("sync.schedule", [&] { return SyncSchedule::parse(c.sync.schedule); });
  p.target = wrap("sync.target", [&] { return parse_guidance_target(c.sync.target); });
  p.loss = build_guidance_loss(c);
  wrap("sync", [&] { p.validate(static_cast<std::size_t>(c.sampler.steps)); });
  return p;
}

std::unique_ptr<DenoiserModel> build_model(const RunConfig& c, const Schedule& sched) {
  if (c.model.kind == "mlp") {
    if (c.model.checkpoint.empty()) throw ConfigError("model.checkpoint", "required for mlp models");
    if (!std::filesystem::exists(c.model.checkpoint)) {
      throw ConfigError("model.checkpoint", "'" + c.model.checkpoint.string() + "' does not exist");
    }
    return std::make_unique<MlpDenoiser>(
        wrap("model.checkpoint", [&] { return load_checkpoint(c.model.checkpoint.string(), c.window_shape()); }));
  }
  if (c.model.kind == "gmm") {
    TextureDatasetSpec spec = c.dataset;
    spec.count = c.model.gmm_components;
    GaussianMixturePrior prior;
    prior.means = wrap("dataset", [&] { return make_texture_dataset(spec); });
    prior.weights.assign(spec.count, 1.0 / static_cast<double>(spec.count));
    prior.variances.assign(spec.count, c.model.gmm_variance);
    return std::make_unique<GaussianMixtureDenoiser>(std::move(prior), sched);
  }
  throw ConfigError("model.kind", "expected mlp or gmm, got '" + c.model.kind + "'");
}

MlpDenoiser initial_mlp(const RunConfig& c) {
  return wrap("model.hidden", [&] {
    return MlpDenoiser::random(c.window_shape(), c.model.hidden, c.train.seed, c.model.gated);
  });
}

}  // namespace syncdiff::tools
