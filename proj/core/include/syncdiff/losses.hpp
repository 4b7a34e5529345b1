#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "syncdiff/grid.hpp"

namespace syncdiff {

struct LossEvaluation {
  double value = 0.0;
  ImageGrid grad;
};

/// Differentiable distance between two grids of equal shape.
class PerceptualLoss {
 public:
  explicit PerceptualLoss(double scale);
  virtual ~PerceptualLoss() = default;

  virtual std::string name() const = 0;
  virtual double value(const ImageGrid& a, const ImageGrid& b) const = 0;
  /// Gradient of value(a, b) with respect to a.
  virtual ImageGrid grad_a(const ImageGrid& a, const ImageGrid& b) const = 0;
  /// value(a, b) and grad_a(a, b) together; overridden where the two share work.
  virtual LossEvaluation value_and_grad(const ImageGrid& a, const ImageGrid& b) const {
    return {value(a, b), grad_a(a, b)};
  }

  double scale() const { return scale_; }

 private:
  double scale_;
};

/// Gram-matrix style loss on raw channels.
///
/// With F the D x N channel matrix (N = H W) and G = F F^T / N:
///   value = scale * mean over the D^2 entries of (G_a - G_b)^2
///   grad  = scale * 4 / (N D^2) * (G_a - G_b) F_a
class StyleLoss final : public PerceptualLoss {
 public:
  explicit StyleLoss(double scale = 1.0) : PerceptualLoss(scale) {}
  std::string name() const override { return "style"; }
  double value(const ImageGrid& a, const ImageGrid& b) const override;
  ImageGrid grad_a(const ImageGrid& a, const ImageGrid& b) const override;
};

/// Channel Gram matrix G = F F^T / N, row-major D x D.
std::vector<double> gram_matrix(const ImageGrid& x);

enum class Activation { kIdentity, kTanh };

/// One stage of a filter bank: zero-padded "same" convolution with an odd
/// square kernel, pointwise activation, optional 2x2 average pooling
/// (trailing odd row/column dropped).
struct ConvStage {
  std::size_t kernel = 1;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  /// [out][in][ky][kx]
  std::vector<double> weights;
  std::vector<double> bias;
  Activation activation = Activation::kTanh;
  bool pool = true;
  /// Contribution of this stage's features to the loss.
  double lambda = 1.0;
};

/// Fixed stack of convolution stages whose intermediate outputs serve as
/// perceptual features.
class FilterBank {
 public:
  explicit FilterBank(std::vector<ConvStage> stages);

  /// Gaussian kernels keyed by seed, tanh activations, pooling after each
  /// stage. `widths` are the output channel counts per stage; `lambdas`
  /// defaults to 1 for every stage.
  static FilterBank random(std::uint64_t seed, std::size_t channels,
                           const std::vector<std::size_t>& widths = {8, 16, 16},
                           std::size_t kernel = 3, std::vector<double> lambdas = {});
  /// Single 1x1 identity stage without activation or pooling.
  static FilterBank identity(std::size_t channels);

  const std::vector<ConvStage>& stages() const { return stages_; }

  /// Output of every stage, in order.
  std::vector<ImageGrid> features(const ImageGrid& x) const;

  /// Reverse pass: given per-stage output cotangents (same shapes as
  /// features(x)), returns the cotangent with respect to x.
  ImageGrid backward(const ImageGrid& x, const std::vector<ImageGrid>& feature_cotangents) const;

  /// Forward activations of one stage, kept for the reverse pass.
  struct StageTrace {
    ImageGrid input;
    ImageGrid pre;
    ImageGrid post;
  };
  ImageGrid backward_from(const std::vector<StageTrace>& trace,
                          const std::vector<ImageGrid>& feature_cotangents) const;

 private:
  std::vector<ConvStage> stages_;
};

/// scale * sum_l lambda_l * mean || f_l(a) - f_l(b) ||^2 over a filter bank.
class FeatureLoss final : public PerceptualLoss {
 public:
  explicit FeatureLoss(FilterBank bank, double scale = 1.0);
  std::string name() const override { return "feature"; }
  double value(const ImageGrid& a, const ImageGrid& b) const override;
  ImageGrid grad_a(const ImageGrid& a, const ImageGrid& b) const override;
  LossEvaluation value_and_grad(const ImageGrid& a, const ImageGrid& b) const override;

  const FilterBank& bank() const { return bank_; }

 private:
  FilterBank bank_;
};

}  // namespace syncdiff
