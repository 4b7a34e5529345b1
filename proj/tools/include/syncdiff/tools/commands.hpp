#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "syncdiff/metrics.hpp"
#include "syncdiff/sync.hpp"
#include "syncdiff/tools/config.hpp"

namespace syncdiff::tools {

/// Exit codes of the command-line front end.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Parses args (without the program name) and runs one command.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

nlohmann::json trace_to_json(const RunTrace& trace, const WindowLayout& layout);
nlohmann::json report_to_json(const MetricsReport& report);

PanoramaJob make_job(const RunConfig& config, const DenoiserModel& model);

struct GenerateOutputs {
  std::filesystem::path tensor;
  std::filesystem::path png;
  std::filesystem::path trace;
  PanoramaResult result;
};

/// Writes panorama.sdt, panorama.png and trace.json into out_dir.
GenerateOutputs cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir);

struct TrainOutputs {
  std::filesystem::path checkpoint;
  std::filesystem::path losses;
  std::vector<double> loss_trace;
};

/// Trains on the configured texture dataset; writes model.sdm and
/// train_losses.json into out_dir.
TrainOutputs cmd_train(const RunConfig& config, const std::filesystem::path& out_dir);

/// Style and feature metric losses (unit scale) used for evaluation.
std::vector<std::shared_ptr<const PerceptualLoss>> metric_losses(const RunConfig& config,
                                                                 const std::string& which);

struct EvaluateOptions {
  std::size_t crops = 6;
  std::string loss = "all";  // style | feature | all
  std::vector<std::filesystem::path> reference;
};

nlohmann::json cmd_evaluate(const RunConfig& config, const std::vector<std::filesystem::path>& files,
                            const EvaluateOptions& options);

/// Independent single-window samples (no overlap, no synchronisation);
/// sample k uses seed 2^40 + k.
std::vector<ImageGrid> reference_samples(const RunConfig& config, const DenoiserModel& model,
                                         std::size_t count);

nlohmann::json cmd_sweep(const RunConfig& config, const std::vector<double>& w0s,
                         const std::vector<std::uint64_t>& seeds, bool with_reference);

}  // namespace syncdiff::tools
