#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "syncdiff/denoiser.hpp"
#include "syncdiff/schedule.hpp"

namespace syncdiff {

/// Fully connected layer y = W x + b with W stored row-major (out x in).
struct DenseLayer {
  std::size_t inputs = 0;
  std::size_t outputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// Sinusoidal timestep features appended to the flattened input.
inline constexpr std::size_t kTimeFeatures = 16;
std::vector<double> time_features(int t);

/// Small fully connected noise predictor over flattened grids.
///
/// Input is the flattened grid followed by kTimeFeatures timestep
/// features; hidden layers use SiLU, the output layer is linear. SiLU is
/// smooth, so the vector-Jacobian product is defined everywhere.
///
/// A network whose last layer has one output beyond the grid size is
/// gated: the extra output g(x, t) scales a skip connection,
///   eps = net(x, t)[0:n] + g(x, t) * x,
/// so a narrow hidden layer does not have to carry the input through.
class MlpDenoiser final : public DenoiserModel {
 public:
  MlpDenoiser(Shape grid_shape, std::vector<DenseLayer> layers);

  /// Gaussian fan-in initialisation with zero biases, keyed by seed. The
  /// gate row, when requested, starts at zero.
  static MlpDenoiser random(Shape grid_shape, const std::vector<std::size_t>& hidden,
                            std::uint64_t seed, bool gated = false);

  ImageGrid predict_eps(const ImageGrid& x, int t) const override;
  ImageGrid vjp_eps(const ImageGrid& x, int t, const ImageGrid& cotangent) const override;
  WindowSet predict_eps_batch(std::span<const ImageGrid> xs, int t) const override;
  WindowSet vjp_eps_batch(std::span<const ImageGrid> xs, int t,
                          std::span<const ImageGrid> cotangents) const override;

  const Shape& grid_shape() const { return shape_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }
  bool gated() const { return layers_.back().outputs == shape_.size() + 1; }

 private:
  Shape shape_;
  std::vector<DenseLayer> layers_;
};

struct TrainOptions {
  double learning_rate = 1e-3;
  std::size_t batch_size = 16;
  std::size_t iterations = 5000;
  std::uint64_t seed = 0;
};

struct TrainResult {
  MlpDenoiser model;
  /// Mean squared error per element, one entry per iteration.
  std::vector<double> losses;
};

/// Minimises E || eps_theta(sqrt(a_t) x0 + sqrt(1 - a_t) eps, t) - eps ||^2
/// with t uniform in [1, T], using Adam on minibatches drawn from the
/// dataset. Bitwise reproducible for a fixed seed. A non-finite loss
/// raises TrainingDivergenceError naming the iteration.
TrainResult mlp_train(MlpDenoiser model, std::span<const ImageGrid> dataset,
                      const Schedule& sched, const TrainOptions& options);

/// Mean of a trailing window of a loss trace; used to compare the start
/// and end of training without single-batch noise.
double smoothed_loss(std::span<const double> losses, std::size_t begin, std::size_t window);

// Checkpoint format ("SDM1"): magic, u32 layer count, per layer u32 inputs
// and u32 outputs, then per layer the row-major weights followed by the
// bias, all float32. Every integer and float is little-endian.
std::string encode_checkpoint(const std::vector<DenseLayer>& layers);
std::vector<DenseLayer> decode_checkpoint(std::string_view bytes);
void save_checkpoint(const MlpDenoiser& model, const std::string& path);
MlpDenoiser load_checkpoint(const std::string& path, Shape grid_shape);

}  // namespace syncdiff
