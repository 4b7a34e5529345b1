#include "syncdiff/losses.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "syncdiff/error.hpp"
#include "syncdiff/rng.hpp"

namespace syncdiff {

PerceptualLoss::PerceptualLoss(double scale) : scale_(scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw RangeError("loss scale must be positive");
}

std::vector<double> gram_matrix(const ImageGrid& x) {
  const std::size_t d = x.channels();
  const std::size_t n = x.height() * x.width();
  std::vector<double> g(d * d, 0.0);
  for (std::size_t p = 0; p < n; ++p) {
    const double* f = x.storage().data() + p * d;
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) g[i * d + j] += f[i] * f[j];
    }
  }
  for (double& v : g) v /= static_cast<double>(n);
  return g;
}

double StyleLoss::value(const ImageGrid& a, const ImageGrid& b) const {
  require_same_shape(a, b, "style_loss");
  const std::vector<double> ga = gram_matrix(a);
  const std::vector<double> gb = gram_matrix(b);
  double acc = 0.0;
  for (std::size_t i = 0; i < ga.size(); ++i) {
    const double d = ga[i] - gb[i];
    acc += d * d;
  }
  return scale() * (acc / static_cast<double>(ga.size()));
}

ImageGrid StyleLoss::grad_a(const ImageGrid& a, const ImageGrid& b) const {
  require_same_shape(a, b, "style_grad");
  const std::size_t d = a.channels();
  const std::size_t n = a.height() * a.width();
  std::vector<double> diff = gram_matrix(a);
  const std::vector<double> gb = gram_matrix(b);
  for (std::size_t i = 0; i < diff.size(); ++i) diff[i] -= gb[i];

  const double coef = scale() * 4.0 / (static_cast<double>(n) * static_cast<double>(d * d));
  ImageGrid grad(a.shape());
  for (std::size_t p = 0; p < n; ++p) {
    const double* f = a.storage().data() + p * d;
    for (std::size_t i = 0; i < d; ++i) {
      double acc = 0.0;
      for (std::size_t j = 0; j < d; ++j) acc += diff[i * d + j] * f[j];
      grad[p * d + i] = coef * acc;
    }
  }
  return grad;
}

namespace {

using StageTrace = FilterBank::StageTrace;

using Matrix = Eigen::MatrixXd;
using RowMatrixMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// Patch matrix: column p holds the zero-padded k x k neighbourhood of
// pixel p, ordered [in][ky][kx] to match the weight layout.
Matrix im2col(const ConvStage& s, const ImageGrid& in) {
  const std::size_t h = in.height();
  const std::size_t w = in.width();
  const std::size_t k = s.kernel;
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  Matrix cols = Matrix::Zero(static_cast<Eigen::Index>(s.in_channels * k * k),
                             static_cast<Eigen::Index>(h * w));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      double* col = cols.col(static_cast<Eigen::Index>(y * w + x)).data();
      for (std::size_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - r;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - r;
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
          const std::size_t src = in.index(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), 0);
          for (std::size_t i = 0; i < s.in_channels; ++i) col[(i * k + ky) * k + kx] = in[src + i];
        }
      }
    }
  }
  return cols;
}

ImageGrid convolve(const ConvStage& s, const ImageGrid& in) {
  const Matrix cols = im2col(s, in);
  const RowMatrixMap wm(s.weights.data(), static_cast<Eigen::Index>(s.out_channels),
                        static_cast<Eigen::Index>(cols.rows()));
  ImageGrid out({in.height(), in.width(), s.out_channels});
  Eigen::Map<Matrix> om(out.values().data(), static_cast<Eigen::Index>(s.out_channels),
                        static_cast<Eigen::Index>(in.height() * in.width()));
  om.noalias() = wm * cols;
  om.colwise() += Eigen::Map<const Eigen::VectorXd>(s.bias.data(), om.rows());
  return out;
}

ImageGrid convolve_transpose(const ConvStage& s, const ImageGrid& dout, const Shape& in_shape) {
  const std::size_t h = in_shape.height;
  const std::size_t w = in_shape.width;
  const std::size_t k = s.kernel;
  const auto r = static_cast<std::ptrdiff_t>(k / 2);
  const auto patch = static_cast<Eigen::Index>(s.in_channels * k * k);
  const RowMatrixMap wm(s.weights.data(), static_cast<Eigen::Index>(s.out_channels), patch);
  const Eigen::Map<const Matrix> dm(dout.values().data(), static_cast<Eigen::Index>(s.out_channels),
                                    static_cast<Eigen::Index>(h * w));
  const Matrix dcols = wm.transpose() * dm;
  ImageGrid din(in_shape);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double* col = dcols.col(static_cast<Eigen::Index>(y * w + x)).data();
      for (std::size_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - r;
        if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(h)) continue;
        for (std::size_t kx = 0; kx < k; ++kx) {
          const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - r;
          if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(w)) continue;
          const std::size_t dst = din.index(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), 0);
          for (std::size_t i = 0; i < s.in_channels; ++i) din[dst + i] += col[(i * k + ky) * k + kx];
        }
      }
    }
  }
  return din;
}

ImageGrid pool2(const ImageGrid& in) {
  ImageGrid out({in.height() / 2, in.width() / 2, in.channels()});
  for (std::size_t y = 0; y < out.height(); ++y) {
    for (std::size_t x = 0; x < out.width(); ++x) {
      for (std::size_t c = 0; c < out.channels(); ++c) {
        out.at(y, x, c) = 0.25 * (in.at(2 * y, 2 * x, c) + in.at(2 * y, 2 * x + 1, c) +
                                  in.at(2 * y + 1, 2 * x, c) + in.at(2 * y + 1, 2 * x + 1, c));
      }
    }
  }
  return out;
}

ImageGrid pool2_transpose(const ImageGrid& dout, const Shape& in_shape) {
  ImageGrid din(in_shape);
  for (std::size_t y = 0; y < dout.height(); ++y) {
    for (std::size_t x = 0; x < dout.width(); ++x) {
      for (std::size_t c = 0; c < dout.channels(); ++c) {
        const double g = 0.25 * dout.at(y, x, c);
        din.at(2 * y, 2 * x, c) += g;
        din.at(2 * y, 2 * x + 1, c) += g;
        din.at(2 * y + 1, 2 * x, c) += g;
        din.at(2 * y + 1, 2 * x + 1, c) += g;
      }
    }
  }
  return din;
}

std::vector<StageTrace> run_bank(const std::vector<ConvStage>& stages, const ImageGrid& x,
                                 std::vector<ImageGrid>* outputs) {
  std::vector<StageTrace> trace;
  trace.reserve(stages.size());
  ImageGrid current = x;
  for (const ConvStage& s : stages) {
    if (current.channels() != s.in_channels) {
      throw DimensionError("filter bank: stage expects " + std::to_string(s.in_channels) +
                           " channels, got " + std::to_string(current.channels()));
    }
    if (s.pool && (current.height() < 2 || current.width() < 2)) {
      throw DimensionError("filter bank: grid " + to_string(current.shape()) +
                           " too small to pool");
    }
    StageTrace st;
    st.input = current;
    st.pre = convolve(s, current);
    st.post = st.pre;
    if (s.activation == Activation::kTanh) {
      for (std::size_t i = 0; i < st.post.size(); ++i) st.post[i] = std::tanh(st.post[i]);
    }
    current = s.pool ? pool2(st.post) : st.post;
    if (outputs) outputs->push_back(current);
    trace.push_back(std::move(st));
  }
  return trace;
}

}  // namespace

FilterBank::FilterBank(std::vector<ConvStage> stages) : stages_(std::move(stages)) {
  if (stages_.empty()) throw DimensionError("filter bank needs at least one stage");
  for (std::size_t l = 0; l < stages_.size(); ++l) {
    const ConvStage& s = stages_[l];
    if (s.kernel % 2 == 0) throw DimensionError("filter bank kernels must have odd size");
    if (s.weights.size() != s.out_channels * s.in_channels * s.kernel * s.kernel ||
        s.bias.size() != s.out_channels) {
      throw DimensionError("filter bank stage " + std::to_string(l) + " has inconsistent storage");
    }
    if (l > 0 && stages_[l - 1].out_channels != s.in_channels) {
      throw DimensionError("filter bank stage " + std::to_string(l) + " channel mismatch");
    }
    if (!(s.lambda >= 0.0)) throw RangeError("filter bank stage weights must be >= 0");
  }
}

FilterBank FilterBank::random(std::uint64_t seed, std::size_t channels,
                              const std::vector<std::size_t>& widths, std::size_t kernel,
                              std::vector<double> lambdas) {
  if (lambdas.empty()) lambdas.assign(widths.size(), 1.0);
  if (lambdas.size() != widths.size()) {
    throw DimensionError("filter bank: one lambda per stage required");
  }
  std::vector<ConvStage> stages;
  std::size_t in = channels;
  for (std::size_t l = 0; l < widths.size(); ++l) {
    ConvStage s;
    s.kernel = kernel;
    s.in_channels = in;
    s.out_channels = widths[l];
    s.weights.resize(s.out_channels * s.in_channels * kernel * kernel);
    s.bias.assign(s.out_channels, 0.0);
    s.activation = Activation::kTanh;
    s.pool = true;
    s.lambda = lambdas[l];
    RngStream rng(seed, StreamDomain::kWeights, 1000 + l);
    const double stddev = 1.0 / std::sqrt(static_cast<double>(in * kernel * kernel));
    for (double& w : s.weights) w = stddev * rng.normal();
    in = s.out_channels;
    stages.push_back(std::move(s));
  }
  return FilterBank(std::move(stages));
}

FilterBank FilterBank::identity(std::size_t channels) {
  ConvStage s;
  s.kernel = 1;
  s.in_channels = channels;
  s.out_channels = channels;
  s.weights.assign(channels * channels, 0.0);
  for (std::size_t c = 0; c < channels; ++c) s.weights[c * channels + c] = 1.0;
  s.bias.assign(channels, 0.0);
  s.activation = Activation::kIdentity;
  s.pool = false;
  s.lambda = 1.0;
  return FilterBank({s});
}

std::vector<ImageGrid> FilterBank::features(const ImageGrid& x) const {
  std::vector<ImageGrid> out;
  run_bank(stages_, x, &out);
  return out;
}

ImageGrid FilterBank::backward(const ImageGrid& x,
                               const std::vector<ImageGrid>& feature_cotangents) const {
  if (feature_cotangents.size() != stages_.size()) {
    throw DimensionError("filter bank: one cotangent per stage required");
  }
  return backward_from(run_bank(stages_, x, nullptr), feature_cotangents);
}

ImageGrid FilterBank::backward_from(const std::vector<StageTrace>& trace,
                                    const std::vector<ImageGrid>& feature_cotangents) const {
  ImageGrid upstream = feature_cotangents.back();
  for (std::size_t l = stages_.size(); l-- > 0;) {
    const ConvStage& s = stages_[l];
    const StageTrace& st = trace[l];
    if (l + 1 < stages_.size()) {
      // Cotangent reaching this stage's output: from the next stage plus
      // this stage's own feature term.
      require_same_shape(upstream, feature_cotangents[l], "filter bank backward");
      for (std::size_t i = 0; i < upstream.size(); ++i) upstream[i] += feature_cotangents[l][i];
    }
    ImageGrid dpost = s.pool ? pool2_transpose(upstream, st.post.shape()) : upstream;
    if (s.activation == Activation::kTanh) {
      for (std::size_t i = 0; i < dpost.size(); ++i) {
        const double th = st.post[i];
        dpost[i] *= 1.0 - th * th;
      }
    }
    upstream = convolve_transpose(s, dpost, st.input.shape());
  }
  return upstream;
}

FeatureLoss::FeatureLoss(FilterBank bank, double scale)
    : PerceptualLoss(scale), bank_(std::move(bank)) {}

double FeatureLoss::value(const ImageGrid& a, const ImageGrid& b) const {
  require_same_shape(a, b, "feature_loss");
  const std::vector<ImageGrid> fa = bank_.features(a);
  const std::vector<ImageGrid> fb = bank_.features(b);
  double total = 0.0;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    double acc = 0.0;
    for (std::size_t i = 0; i < fa[l].size(); ++i) {
      const double d = fa[l][i] - fb[l][i];
      acc += d * d;
    }
    total += bank_.stages()[l].lambda * acc / static_cast<double>(fa[l].size());
  }
  return scale() * total;
}

ImageGrid FeatureLoss::grad_a(const ImageGrid& a, const ImageGrid& b) const {
  return value_and_grad(a, b).grad;
}

LossEvaluation FeatureLoss::value_and_grad(const ImageGrid& a, const ImageGrid& b) const {
  require_same_shape(a, b, "feature_grad");
  std::vector<ImageGrid> fa;
  const std::vector<StageTrace> trace = run_bank(bank_.stages(), a, &fa);
  const std::vector<ImageGrid> fb = bank_.features(b);
  std::vector<ImageGrid> cot;
  cot.reserve(fa.size());
  double total = 0.0;
  for (std::size_t l = 0; l < fa.size(); ++l) {
    const double n = static_cast<double>(fa[l].size());
    const double lambda = bank_.stages()[l].lambda;
    const double coef = scale() * lambda * 2.0 / n;
    double acc = 0.0;
    ImageGrid c(fa[l].shape());
    for (std::size_t i = 0; i < fa[l].size(); ++i) {
      const double d = fa[l][i] - fb[l][i];
      acc += d * d;
      c[i] = coef * d;
    }
    total += lambda * acc / n;
    cot.push_back(std::move(c));
  }
  return {scale() * total, bank_.backward_from(trace, cot)};
}

}  // namespace syncdiff
