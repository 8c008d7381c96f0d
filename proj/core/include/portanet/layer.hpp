#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "portanet/blob.hpp"
#include "portanet/config.hpp"
#include "portanet/ops/activation.hpp"
#include "portanet/ops/convolution.hpp"
#include "portanet/ops/inner_product.hpp"
#include "portanet/ops/loss.hpp"
#include "portanet/ops/pooling.hpp"
#include "portanet/random.hpp"

namespace portanet {

/// One `[layer]` section: wiring plus the type-specific keys.
struct LayerSpec {
  std::string name;
  std::string type;
  std::vector<std::string> bottoms;
  std::vector<std::string> tops;
  ConfigSection params;
};

using BlobRefs = std::span<Blob* const>;

/// Executor over named blobs. reshape() infers top shapes from bottom shapes
/// (and allocates learnable blobs on first use); forward() and backward()
/// then run the block's kernels.
class Layer {
 public:
  explicit Layer(std::string name) : name_(std::move(name)) {}
  virtual ~Layer() = default;
  Layer(const Layer&) = delete;
  Layer& operator=(const Layer&) = delete;

  const std::string& name() const noexcept { return name_; }
  virtual std::string_view type() const = 0;
  virtual std::size_t num_bottoms() const = 0;
  virtual std::size_t num_tops() const = 0;
  virtual bool allows_in_place() const { return false; }
  /// Whether gradients can flow into bottom `i` at all (labels cannot).
  virtual bool can_propagate_to(std::size_t /*bottom*/) const { return true; }

  virtual void reshape(BlobRefs bottom, BlobRefs top) = 0;
  virtual void forward(BlobRefs bottom, BlobRefs top) = 0;
  virtual void backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) = 0;

  /// Xavier-uniform weights, zero biases.
  virtual void init_params(Rng& /*rng*/) {}
  std::vector<Blob>& params() noexcept { return params_; }
  const std::vector<Blob>& params() const noexcept { return params_; }

  /// Non-zero for layers whose first top is a loss term.
  virtual float loss_weight() const { return 0.0f; }

 protected:
  std::vector<Blob> params_;

 private:
  std::string name_;
};

/// Source of the `data` and `label` blobs; filled by Net::set_input.
class InputLayer final : public Layer {
 public:
  InputLayer(std::string name, std::size_t channels, std::size_t height, std::size_t width);

  std::string_view type() const override { return "Input"; }
  std::size_t num_bottoms() const override { return 0; }
  std::size_t num_tops() const override { return 2; }

  void set_batch(std::size_t batch) { batch_ = batch; }
  Shape sample_shape() const { return Shape{channels_, height_, width_}; }

  void reshape(BlobRefs bottom, BlobRefs top) override;
  void forward(BlobRefs, BlobRefs) override {}
  void backward(BlobRefs, const std::vector<bool>&, BlobRefs) override {}

 private:
  std::size_t channels_, height_, width_;
  std::size_t batch_ = 1;
};

class ConvolutionLayer final : public Layer {
 public:
  ConvolutionLayer(std::string name, const ConvParams& params);

  std::string_view type() const override { return "Convolution"; }
  std::size_t num_bottoms() const override { return 1; }
  std::size_t num_tops() const override { return 1; }
  const ConvParams& conv_params() const { return params_cfg_; }

  void reshape(BlobRefs bottom, BlobRefs top) override;
  void forward(BlobRefs bottom, BlobRefs top) override;
  void backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) override;
  void init_params(Rng& rng) override;

 private:
  ConvParams params_cfg_;
  ConvWorkspace workspace_;
};

class PoolingLayer final : public Layer {
 public:
  PoolingLayer(std::string name, const PoolParams& params);

  std::string_view type() const override { return "Pooling"; }
  std::size_t num_bottoms() const override { return 1; }
  std::size_t num_tops() const override { return 1; }
  const PoolParams& pool_params() const { return params_cfg_; }
  const PoolMask& mask() const { return mask_; }

  void reshape(BlobRefs bottom, BlobRefs top) override;
  void forward(BlobRefs bottom, BlobRefs top) override;
  void backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) override;

 private:
  PoolParams params_cfg_;
  PoolMask mask_;
};

class InnerProductLayer final : public Layer {
 public:
  InnerProductLayer(std::string name, const IpParams& params);

  std::string_view type() const override { return "InnerProduct"; }
  std::size_t num_bottoms() const override { return 1; }
  std::size_t num_tops() const override { return 1; }
  const IpParams& ip_params() const { return params_cfg_; }

  void reshape(BlobRefs bottom, BlobRefs top) override;
  void forward(BlobRefs bottom, BlobRefs top) override;
  void backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) override;
  void init_params(Rng& rng) override;

 private:
  IpParams params_cfg_;
  IpWorkspace workspace_;
};

/// Leaky ReLU. When run in place the input is copied aside during forward so
/// backward still sees pre-activation values.
class ReluLayer final : public Layer {
 public:
  ReluLayer(std::string name, float negative_slope);

  std::string_view type() const override { return "ReLU"; }
  std::size_t num_bottoms() const override { return 1; }
  std::size_t num_tops() const override { return 1; }
  bool allows_in_place() const override { return true; }
  float negative_slope() const { return slope_; }

  void reshape(BlobRefs bottom, BlobRefs top) override;
  void forward(BlobRefs bottom, BlobRefs top) override;
  void backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) override;

 private:
  float slope_;
  Tensor saved_input_;
};

class SoftmaxLayer final : public Layer {
 public:
  explicit SoftmaxLayer(std::string name) : Layer(std::move(name)) {}

  std::string_view type() const override { return "Softmax"; }
  std::size_t num_bottoms() const override { return 1; }
  std::size_t num_tops() const override { return 1; }

  void reshape(BlobRefs bottom, BlobRefs top) override;
  void forward(BlobRefs bottom, BlobRefs top) override;
  void backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) override;
};

/// Softmax followed by the mean negative log-likelihood of the labels.
class SoftmaxWithLossLayer final : public Layer {
 public:
  SoftmaxWithLossLayer(std::string name, float loss_weight);

  std::string_view type() const override { return "SoftmaxWithLoss"; }
  std::size_t num_bottoms() const override { return 2; }
  std::size_t num_tops() const override { return 1; }
  bool can_propagate_to(std::size_t bottom) const override { return bottom == 0; }
  float loss_weight() const override { return loss_weight_; }
  const Tensor& probabilities() const { return prob_; }

  void reshape(BlobRefs bottom, BlobRefs top) override;
  void forward(BlobRefs bottom, BlobRefs top) override;
  void backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) override;

 private:
  float loss_weight_;
  Tensor prob_;
};

class AccuracyLayer final : public Layer {
 public:
  AccuracyLayer(std::string name, std::size_t top_k);

  std::string_view type() const override { return "Accuracy"; }
  std::size_t num_bottoms() const override { return 2; }
  std::size_t num_tops() const override { return 1; }
  bool can_propagate_to(std::size_t) const override { return false; }

  void reshape(BlobRefs bottom, BlobRefs top) override;
  void forward(BlobRefs bottom, BlobRefs top) override;
  void backward(BlobRefs, const std::vector<bool>&, BlobRefs) override {}

 private:
  std::size_t top_k_;
};

/// Builds a layer from its spec. Throws ConfigError for unknown types or keys.
std::unique_ptr<Layer> make_layer(const LayerSpec& spec);

/// Xavier-uniform fill: U(−√(3/fan_in), √(3/fan_in)).
void xavier_fill(Tensor& t, std::size_t fan_in, Rng& rng);

}  // namespace portanet
