#include "syncdiff/mlp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "syncdiff/error.hpp"
#include "syncdiff/rng.hpp"

namespace syncdiff {
namespace {

using Matrix = Eigen::MatrixXd;
using RowMatrixMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using VectorMap = Eigen::Map<const Eigen::VectorXd>;

constexpr double kTimeScale = 1000.0;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct ForwardPass {
  std::vector<Matrix> inputs;  // input to each layer; inputs[0] is the network input
  std::vector<Matrix> pre;     // W a + b for each layer
};

Matrix pack_inputs(std::span<const ImageGrid> xs, std::span<const int> ts, const Shape& shape) {
  const std::size_t dim = shape.size();
  Matrix x(static_cast<Eigen::Index>(dim + kTimeFeatures), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < xs.size(); ++j) {
    const std::vector<double> tf = time_features(ts.size() == 1 ? ts[0] : ts[j]);
    if (xs[j].shape() != shape) {
      throw DimensionError("mlp: grid shape " + to_string(xs[j].shape()) + " does not match " +
                           to_string(shape));
    }
    const auto col = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i < dim; ++i) x(static_cast<Eigen::Index>(i), col) = xs[j][i];
    for (std::size_t i = 0; i < kTimeFeatures; ++i) {
      x(static_cast<Eigen::Index>(dim + i), col) = tf[i];
    }
  }
  return x;
}

ForwardPass forward(const std::vector<DenseLayer>& layers, Matrix input) {
  ForwardPass pass;
  pass.inputs.reserve(layers.size());
  pass.pre.reserve(layers.size());
  Matrix a = std::move(input);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    const RowMatrixMap w(layer.weights.data(), static_cast<Eigen::Index>(layer.outputs),
                         static_cast<Eigen::Index>(layer.inputs));
    const VectorMap b(layer.bias.data(), static_cast<Eigen::Index>(layer.outputs));
    Matrix z = w * a;
    z.colwise() += b;
    pass.inputs.push_back(std::move(a));
    if (l + 1 < layers.size()) {
      a = z.unaryExpr([](double v) { return v * sigmoid(v); });
    }
    pass.pre.push_back(std::move(z));
  }
  return pass;
}

// Propagates output cotangents back to the network input. When weight
// gradients are requested they are accumulated into grads (same layout as
// the layers).
Matrix backward(const std::vector<DenseLayer>& layers, const ForwardPass& pass, Matrix upstream,
                std::vector<DenseLayer>* grads) {
  for (std::size_t l = layers.size(); l-- > 0;) {
    const DenseLayer& layer = layers[l];
    if (l + 1 < layers.size()) {
      upstream = upstream.cwiseProduct(pass.pre[l].unaryExpr([](double z) {
        const double s = sigmoid(z);
        return s * (1.0 + z * (1.0 - s));
      }));
    }
    const RowMatrixMap w(layer.weights.data(), static_cast<Eigen::Index>(layer.outputs),
                         static_cast<Eigen::Index>(layer.inputs));
    if (grads) {
      DenseLayer& g = (*grads)[l];
      Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> gw(
          g.weights.data(), static_cast<Eigen::Index>(layer.outputs),
          static_cast<Eigen::Index>(layer.inputs));
      gw.noalias() = upstream * pass.inputs[l].transpose();
      // Reduce into an Eigen-owned (aligned) vector: the vectorised
      // reduction peels rows by destination alignment, which would make
      // the summation order depend on where the bias storage lives.
      const Eigen::VectorXd bias_grad = upstream.rowwise().sum();
      std::copy(bias_grad.data(), bias_grad.data() + bias_grad.size(), g.bias.begin());
    }
    if (l > 0 || !grads) upstream = w.transpose() * upstream;
  }
  return upstream;
}

WindowSet unpack(const Matrix& m, std::size_t count, const Shape& shape) {
  WindowSet out;
  out.reserve(count);
  for (std::size_t j = 0; j < count; ++j) {
    ImageGrid g(shape);
    for (std::size_t i = 0; i < shape.size(); ++i) {
      g[i] = m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    out.push_back(std::move(g));
  }
  return out;
}

WindowSet assemble(const Matrix& raw, std::span<const ImageGrid> xs, const Shape& shape,
                   bool gated) {
  WindowSet out = unpack(raw, xs.size(), shape);
  if (gated) {
    const auto gate_row = static_cast<Eigen::Index>(shape.size());
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double g = raw(gate_row, static_cast<Eigen::Index>(j));
      for (std::size_t i = 0; i < shape.size(); ++i) out[j][i] += g * xs[j][i];
    }
  }
  return out;
}

}  // namespace

std::vector<double> time_features(int t) {
  const double tau = static_cast<double>(t) / kTimeScale;
  std::vector<double> f(kTimeFeatures);
  for (std::size_t k = 0; k < kTimeFeatures / 2; ++k) {
    const double omega = std::numbers::pi / 2.0 * static_cast<double>(1u << k);
    f[2 * k] = std::sin(omega * tau);
    f[2 * k + 1] = std::cos(omega * tau);
  }
  return f;
}

MlpDenoiser::MlpDenoiser(Shape grid_shape, std::vector<DenseLayer> layers)
    : shape_(grid_shape), layers_(std::move(layers)) {
  if (layers_.empty()) throw DimensionError("mlp: needs at least one layer");
  if (layers_.front().inputs != shape_.size() + kTimeFeatures) {
    throw DimensionError("mlp: first layer takes " + std::to_string(layers_.front().inputs) +
                         " inputs, grid " + to_string(shape_) + " needs " +
                         std::to_string(shape_.size() + kTimeFeatures));
  }
  const std::size_t out = layers_.back().outputs;
  if (out != shape_.size() && out != shape_.size() + 1) {
    throw DimensionError("mlp: last layer width " + std::to_string(out) +
                         " does not match the grid size " + std::to_string(shape_.size()));
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const DenseLayer& layer = layers_[l];
    if (layer.weights.size() != layer.inputs * layer.outputs || layer.bias.size() != layer.outputs) {
      throw DimensionError("mlp: layer " + std::to_string(l) + " has inconsistent storage");
    }
    if (l > 0 && layers_[l - 1].outputs != layer.inputs) {
      throw DimensionError("mlp: layer " + std::to_string(l) + " input width mismatch");
    }
  }
}

MlpDenoiser MlpDenoiser::random(Shape grid_shape, const std::vector<std::size_t>& hidden,
                                std::uint64_t seed, bool gated) {
  std::vector<std::size_t> widths;
  widths.push_back(grid_shape.size() + kTimeFeatures);
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(grid_shape.size() + (gated ? 1 : 0));

  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    DenseLayer layer;
    layer.inputs = widths[l];
    layer.outputs = widths[l + 1];
    layer.weights.resize(layer.inputs * layer.outputs);
    layer.bias.assign(layer.outputs, 0.0);
    RngStream rng(seed, StreamDomain::kWeights, l);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(layer.inputs));
    for (double& w : layer.weights) w = stddev * rng.normal();
    layers.push_back(std::move(layer));
  }
  if (gated) {
    DenseLayer& last = layers.back();
    std::fill(last.weights.end() - static_cast<std::ptrdiff_t>(last.inputs), last.weights.end(), 0.0);
  }
  return MlpDenoiser(grid_shape, std::move(layers));
}

ImageGrid MlpDenoiser::predict_eps(const ImageGrid& x, int t) const {
  return std::move(predict_eps_batch(std::span(&x, 1), t).front());
}

ImageGrid MlpDenoiser::vjp_eps(const ImageGrid& x, int t, const ImageGrid& cotangent) const {
  return std::move(vjp_eps_batch(std::span(&x, 1), t, std::span(&cotangent, 1)).front());
}

WindowSet MlpDenoiser::predict_eps_batch(std::span<const ImageGrid> xs, int t) const {
  if (xs.empty()) return {};
  const ForwardPass pass = forward(layers_, pack_inputs(xs, std::span(&t, 1), shape_));
  return assemble(pass.pre.back(), xs, shape_, gated());
}

WindowSet MlpDenoiser::vjp_eps_batch(std::span<const ImageGrid> xs, int t,
                                     std::span<const ImageGrid> cotangents) const {
  if (xs.size() != cotangents.size()) {
    throw DimensionError("mlp: input and cotangent counts differ");
  }
  if (xs.empty()) return {};
  const bool gate = gated();
  const std::size_t dim = shape_.size();
  const ForwardPass pass = forward(layers_, pack_inputs(xs, std::span(&t, 1), shape_));
  Matrix up(static_cast<Eigen::Index>(layers_.back().outputs), static_cast<Eigen::Index>(xs.size()));
  for (std::size_t j = 0; j < cotangents.size(); ++j) {
    require_same_shape(xs[j], cotangents[j], "mlp_vjp_eps");
    const auto c = static_cast<Eigen::Index>(j);
    for (std::size_t i = 0; i < dim; ++i) up(static_cast<Eigen::Index>(i), c) = cotangents[j][i];
    if (gate) up(static_cast<Eigen::Index>(dim), c) = dot(cotangents[j], xs[j]);
  }
  // Time features are constants, so only the grid rows of the input
  // cotangent are returned.
  const Matrix in = backward(layers_, pass, std::move(up), nullptr);
  WindowSet out = unpack(in, xs.size(), shape_);
  if (gate) {
    const Matrix& raw = pass.pre.back();
    for (std::size_t j = 0; j < xs.size(); ++j) {
      const double g = raw(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(j));
      for (std::size_t i = 0; i < dim; ++i) out[j][i] += g * cotangents[j][i];
    }
  }
  return out;
}

TrainResult mlp_train(MlpDenoiser model, std::span<const ImageGrid> dataset,
                      const Schedule& sched, const TrainOptions& options) {
  TrainResult result{std::move(model), {}};
  if (options.iterations == 0) return result;
  if (dataset.empty()) throw DimensionError("mlp_train: dataset is empty");
  if (options.batch_size == 0) throw DimensionError("mlp_train: batch size must be positive");
  const Shape shape = result.model.grid_shape();
  for (const ImageGrid& g : dataset) {
    if (g.shape() != shape) throw DimensionError("mlp_train: dataset grid shape mismatch");
  }

  std::vector<DenseLayer>& layers = result.model.mutable_layers();
  auto zeros_like = [&] {
    std::vector<DenseLayer> z = layers;
    for (DenseLayer& l : z) {
      std::fill(l.weights.begin(), l.weights.end(), 0.0);
      std::fill(l.bias.begin(), l.bias.end(), 0.0);
    }
    return z;
  };
  std::vector<DenseLayer> grads = zeros_like();
  std::vector<DenseLayer> m1 = zeros_like();
  std::vector<DenseLayer> m2 = zeros_like();
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  const std::size_t batch = options.batch_size;
  const std::size_t dim = shape.size();
  result.losses.reserve(options.iterations);

  std::vector<ImageGrid> noisy(batch);
  std::vector<ImageGrid> noise(batch);
  std::vector<int> steps(batch);
  const bool gate = result.model.gated();
  for (std::size_t it = 0; it < options.iterations; ++it) {
    RngStream rng(options.seed, StreamDomain::kTraining, it);
    for (std::size_t j = 0; j < batch; ++j) {
      steps[j] = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(sched.steps())));
      const ImageGrid& x0 = dataset[rng.below(dataset.size())];
      noise[j] = rng.normal_grid(shape);
      noisy[j] = add_noise(x0, steps[j], noise[j], sched);
    }

    const ForwardPass pass = forward(layers, pack_inputs(noisy, steps, shape));
    const Matrix& raw = pass.pre.back();
    Matrix up(raw.rows(), raw.cols());
    double loss = 0.0;
    const double norm = 1.0 / static_cast<double>(dim * batch);
    for (std::size_t j = 0; j < batch; ++j) {
      const auto c = static_cast<Eigen::Index>(j);
      const double g = gate ? raw(static_cast<Eigen::Index>(dim), c) : 0.0;
      double gate_grad = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const double diff = raw(r, c) + g * noisy[j][i] - noise[j][i];
        loss += diff * diff;
        up(r, c) = 2.0 * diff * norm;
        gate_grad += 2.0 * diff * norm * noisy[j][i];
      }
      if (gate) up(static_cast<Eigen::Index>(dim), c) = gate_grad;
    }
    loss *= norm;
    if (!std::isfinite(loss)) {
      throw TrainingDivergenceError(it, "mlp_train: loss became non-finite at iteration " +
                                            std::to_string(it));
    }
    result.losses.push_back(loss);

    backward(layers, pass, std::move(up), &grads);

    const double step = static_cast<double>(it + 1);
    const double c1 = 1.0 - std::pow(kBeta1, step);
    const double c2 = 1.0 - std::pow(kBeta2, step);
    auto adam = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                    std::vector<double>& v) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        p[i] -= options.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + kEps);
      }
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
      adam(layers[l].weights, grads[l].weights, m1[l].weights, m2[l].weights);
      adam(layers[l].bias, grads[l].bias, m1[l].bias, m2[l].bias);
    }
  }
  return result;
}

double smoothed_loss(std::span<const double> losses, std::size_t begin, std::size_t window) {
  if (begin >= losses.size() || window == 0) throw RangeError("smoothed_loss: empty window");
  const std::size_t end = std::min(losses.size(), begin + window);
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += losses[i];
  return acc / static_cast<double>(end - begin);
}

}  // namespace syncdiff
