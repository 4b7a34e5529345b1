#include "syncdiff/tools/commands.hpp"

#include <cmath>
#include <ostream>

#include "CLI11.hpp"

#include "syncdiff/tools/io.hpp"

namespace syncdiff::tools {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kReferenceSeedBase = std::uint64_t{1} << 40;

json stats_json(const std::vector<double>& values) {
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  return {{"mean", mean},
          {"std", std::sqrt(var / static_cast<double>(values.size()))},
          {"values", values}};
}

json baseline_json(const BaselineStats& b) {
  return {{"mean", b.mean}, {"std", b.std}, {"pairs", b.pairs}};
}

const json kOutOfScope = {"GIQA", "FID", "KID", "CLIP-S"};

}  // namespace

json trace_to_json(const RunTrace& trace, const WindowLayout& layout) {
  json steps = json::array();
  for (const StepRecord& s : trace.steps) {
    steps.push_back({{"t", s.t},
                     {"s", s.s},
                     {"weight", s.weight},
                     {"sync", s.sync_applied},
                     {"losses", s.losses}});
  }
  const Shape p = layout.panorama();
  return {{"panorama", {p.height, p.width, p.channels}},
          {"window_width", layout.window().width},
          {"stride", layout.stride()},
          {"windows", trace.windows},
          {"anchor", trace.anchor},
          {"sync_calls", trace.sync_calls()},
          {"steps", steps}};
}

json report_to_json(const MetricsReport& r) {
  json losses = json::array();
  for (const LossReport& l : r.losses) {
    json pairs = json::array();
    for (const PairValue& p : l.intra.pairs) pairs.push_back({p.i, p.j, p.value});
    json entry = {{"loss", l.loss}, {"intra_mean", l.intra.mean}, {"pairs", pairs}};
    if (l.baseline) entry["reference"] = baseline_json(*l.baseline);
    losses.push_back(entry);
  }
  return {{"panorama", {r.panorama.height, r.panorama.width, r.panorama.channels}},
          {"crops", r.n_crops},
          {"crop_width", r.crop_width},
          {"pair_count", r.losses.empty() ? 0 : r.losses.front().intra.pairs.size()},
          {"metrics", losses}};
}

PanoramaJob make_job(const RunConfig& config, const DenoiserModel& model) {
  PanoramaJob job;
  job.model = &model;
  job.sched = build_schedule(config);
  job.plan = build_plan(config, job.sched);
  job.layout = build_layout(config);
  job.sampler = build_sampler(config);
  job.policy = build_policy(config);
  job.seed = config.seed;
  return job;
}

GenerateOutputs cmd_generate(const RunConfig& config, const fs::path& out_dir) {
  validate(config);
  const Schedule sched = build_schedule(config);
  const std::unique_ptr<DenoiserModel> model = build_model(config, sched);
  const PanoramaJob job = make_job(config, *model);

  GenerateOutputs out;
  out.result = run_panorama(job);
  out.tensor = out_dir / "panorama.sdt";
  out.png = out_dir / "panorama.png";
  out.trace = out_dir / "trace.json";
  write_tensor(out.tensor, out.result.panorama);
  write_file(out.png, render_png(out.result.panorama));
  write_file(out.trace, trace_to_json(out.result.trace, job.layout).dump(1) + "\n");
  return out;
}

TrainOutputs cmd_train(const RunConfig& config, const fs::path& out_dir) {
  validate(config);
  const Schedule sched = build_schedule(config);
  const std::vector<ImageGrid> data = make_texture_dataset(config.dataset);
  TrainOptions opt;
  opt.learning_rate = config.train.learning_rate;
  opt.batch_size = config.train.batch_size;
  opt.iterations = config.train.iterations;
  opt.seed = config.train.seed;
  TrainResult r = mlp_train(initial_mlp(config), data, sched, opt);

  TrainOutputs out;
  out.checkpoint = out_dir / "model.sdm";
  out.losses = out_dir / "train_losses.json";
  write_file(out.checkpoint, encode_checkpoint(r.model.layers()));
  json trace = {{"iterations", r.losses.size()}, {"losses", r.losses}};
  if (!r.losses.empty()) {
    const std::size_t w = std::min<std::size_t>(100, r.losses.size());
    trace["initial_smoothed"] = smoothed_loss(r.losses, 0, w);
    trace["final_smoothed"] = smoothed_loss(r.losses, r.losses.size() - w, w);
  }
  write_file(out.losses, trace.dump(1) + "\n");
  out.loss_trace = std::move(r.losses);
  return out;
}

std::vector<std::shared_ptr<const PerceptualLoss>> metric_losses(const RunConfig& config,
                                                                 const std::string& which) {
  std::vector<std::shared_ptr<const PerceptualLoss>> out;
  if (which == "style" || which == "all") out.push_back(std::make_shared<StyleLoss>(1.0));
  if (which == "feature" || which == "all") {
    out.push_back(std::make_shared<FeatureLoss>(build_filter_bank(config), 1.0));
  }
  if (out.empty()) throw ConfigError("--loss", "expected style, feature or all, got '" + which + "'");
  return out;
}

json cmd_evaluate(const RunConfig& config, const std::vector<fs::path>& files,
                  const EvaluateOptions& options) {
  if (files.empty()) throw ConfigError("panoramas", "at least one panorama file is required");
  const auto losses = metric_losses(config, options.loss);
  std::vector<const PerceptualLoss*> raw;
  for (const auto& l : losses) raw.push_back(l.get());

  std::vector<ImageGrid> reference;
  for (const fs::path& p : options.reference) reference.push_back(read_tensor(p));
  std::vector<BaselineStats> baselines;
  if (!reference.empty()) {
    for (const auto& l : losses) {
      baselines.push_back(reference_baseline(reference, *l, config.metrics.reference_pairs,
                                             config.metrics.reference_seed));
    }
  }

  json panoramas = json::array();
  for (const fs::path& f : files) {
    MetricsReport r = evaluate_panorama(read_tensor(f), raw, options.crops);
    for (std::size_t i = 0; i < baselines.size(); ++i) r.losses[i].baseline = baselines[i];
    json entry = report_to_json(r);
    entry["file"] = f.string();
    panoramas.push_back(entry);
  }
  return {{"panoramas", panoramas}, {"out_of_scope", kOutOfScope}};
}

std::vector<ImageGrid> reference_samples(const RunConfig& config, const DenoiserModel& model,
                                         std::size_t count) {
  RunConfig single = config;
  single.layout.width = config.layout.window_width;
  single.layout.anchor.reset();
  single.sync.enabled = false;
  PanoramaJob job = make_job(single, model);
  std::vector<ImageGrid> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    job.seed = kReferenceSeedBase + k;
    out.push_back(quantize_f32(run_panorama(job).panorama));
  }
  return out;
}

json cmd_sweep(const RunConfig& config, const std::vector<double>& w0s,
               const std::vector<std::uint64_t>& seeds, bool with_reference) {
  if (w0s.empty()) throw ConfigError("--w0", "at least one value is required");
  if (seeds.empty()) throw ConfigError("--seeds", "at least one seed is required");
  validate(config);
  const Schedule sched = build_schedule(config);
  const std::unique_ptr<DenoiserModel> model = build_model(config, sched);
  const auto losses = metric_losses(config, "all");

  json results = json::array();
  for (double w0 : w0s) {
    RunConfig c = config;
    c.sync.w0 = w0;
    PanoramaJob job = make_job(c, *model);
    std::vector<std::vector<double>> values(losses.size());
    for (std::uint64_t seed : seeds) {
      job.seed = seed;
      const ImageGrid z = quantize_f32(run_panorama(job).panorama);
      for (std::size_t l = 0; l < losses.size(); ++l) {
        values[l].push_back(intra_metric(z, *losses[l], config.metrics.crops).mean);
      }
    }
    json entry = {{"w0", w0}};
    for (std::size_t l = 0; l < losses.size(); ++l) entry[losses[l]->name()] = stats_json(values[l]);
    results.push_back(entry);
  }
  json report = {{"seeds", seeds},
                 {"crops", config.metrics.crops},
                 {"sync_schedule", config.sync.schedule},
                 {"guidance_loss", config.sync.loss},
                 {"results", results},
                 {"out_of_scope", kOutOfScope}};
  if (with_reference) {
    const std::vector<ImageGrid> samples =
        reference_samples(config, *model, config.metrics.reference_samples);
    json ref;
    for (const auto& l : losses) {
      ref[l->name()] = baseline_json(reference_baseline(
          samples, *l, config.metrics.reference_pairs, config.metrics.reference_seed));
    }
    report["reference"] = ref;
  }
  return report;
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synchronised joint-diffusion panorama generator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::vector<double> w0;
  std::optional<std::string> sync_schedule;
  std::optional<std::string> loss;
  std::string out_path;
  bool multidiffusion = false;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed");
    cmd->add_option("--sync-schedule", sync_schedule, "every | interval:f | initial:k");
    cmd->add_option("--loss", loss, "Guidance loss: style | feature");
  };

  CLI::App* generate = app.add_subcommand("generate", "Generate one panorama");
  generate->add_option("--config", config_path, "Run configuration")->required();
  generate->add_option("--w0", w0, "Initial synchronisation weight")->expected(1);
  generate->add_flag("--multidiffusion", multidiffusion, "Disable synchronisation");
  generate->add_option("--out", out_path, "Output directory");
  add_run_flags(generate);

  CLI::App* train = app.add_subcommand("train", "Train the toy denoiser");
  train->add_option("--config", config_path, "Run configuration")->required();
  train->add_option("--seed", seed, "Training seed");
  train->add_option("--out", out_path, "Output directory");

  std::vector<std::string> files;
  std::vector<std::string> reference;
  std::size_t crops = 0;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Intra-panorama coherence metrics");
  evaluate->add_option("panoramas", files, "Panorama tensor files")->required();
  evaluate->add_option("--config", config_path, "Run configuration (feature bank, pairs)");
  evaluate->add_option("--crops", crops, "Number of non-overlapping crops");
  evaluate->add_option("--loss", loss, "style | feature | all");
  evaluate->add_option("--reference", reference, "Reference sample tensors for the baseline");
  evaluate->add_option("--out", out_path, "Report file (default: stdout)");

  std::vector<std::uint64_t> seeds;
  bool with_reference = false;
  CLI::App* sweep = app.add_subcommand("sweep", "Intra metrics over a w0 x seed grid");
  sweep->add_option("--config", config_path, "Run configuration")->required();
  sweep->add_option("--w0", w0, "Initial weights to sweep")->required();
  sweep->add_option("--seeds", seeds, "Seeds to run")->required();
  sweep->add_flag("--reference", with_reference, "Also compute the reference baseline");
  sweep->add_option("--sync-schedule", sync_schedule, "every | interval:f | initial:k");
  sweep->add_option("--loss", loss, "Guidance loss: style | feature");
  sweep->add_option("--out", out_path, "Report file (default: stdout)");

  std::vector<std::string> argv_store{"syncdiff"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& a : argv_store) argv.push_back(a.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitConfig;
  }

  auto emit = [&](const json& report) {
    if (out_path.empty()) {
      out << report.dump(1) << "\n";
    } else {
      write_file(out_path, report.dump(1) + "\n");
    }
  };

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) {
      if (train->parsed()) {
        config.train.seed = *seed;
      } else {
        config.seed = *seed;
      }
    }
    if (sync_schedule) config.sync.schedule = *sync_schedule;
    if (loss && !evaluate->parsed()) config.sync.loss = *loss;
    if (multidiffusion) config.sync.enabled = false;

    if (generate->parsed()) {
      if (!w0.empty()) config.sync.w0 = w0.front();
      const fs::path dir = out_path.empty() ? config.output_dir : fs::path(out_path);
      const GenerateOutputs g = cmd_generate(config, dir);
      out << "wrote " << g.tensor.string() << " (" << to_string(g.result.panorama.shape())
          << ", " << g.result.trace.windows << " windows, " << g.result.trace.sync_calls()
          << " sync steps)\n";
    } else if (train->parsed()) {
      const fs::path dir = out_path.empty() ? config.output_dir : fs::path(out_path);
      const TrainOutputs t = cmd_train(config, dir);
      out << "wrote " << t.checkpoint.string() << " after " << t.loss_trace.size()
          << " iterations\n";
    } else if (evaluate->parsed()) {
      EvaluateOptions opt;
      opt.crops = crops ? crops : config.metrics.crops;
      opt.loss = loss.value_or("all");
      for (const std::string& r : reference) opt.reference.emplace_back(r);
      emit(cmd_evaluate(config, std::vector<fs::path>(files.begin(), files.end()), opt));
    } else if (sweep->parsed()) {
      emit(cmd_sweep(config, w0, seeds, with_reference));
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace syncdiff::tools
