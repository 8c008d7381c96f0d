#include "portanet/layer.hpp"

#include <algorithm>
#include <cmath>

#include "portanet/error.hpp"
#include "scratch.hpp"

namespace portanet {

void xavier_fill(Tensor& t, std::size_t fan_in, Rng& rng) {
  const float limit = std::sqrt(3.0f / static_cast<float>(fan_in));
  for (float& v : t.values()) v = rng.uniform(-limit, limit);
}

// ---- Input ----

InputLayer::InputLayer(std::string name, std::size_t channels, std::size_t height, std::size_t width)
    : Layer(std::move(name)), channels_(channels), height_(height), width_(width) {}

void InputLayer::reshape(BlobRefs, BlobRefs top) {
  top[0]->reshape(Shape{batch_, channels_, height_, width_});
  top[1]->reshape(Shape{batch_});
}

// ---- Convolution ----

ConvolutionLayer::ConvolutionLayer(std::string name, const ConvParams& params)
    : Layer(std::move(name)), params_cfg_(params) {}

void ConvolutionLayer::reshape(BlobRefs bottom, BlobRefs top) {
  detail::expect_rank(bottom[0]->shape(), 4, "convolution bottom");
  const WindowGeometry g = conv_geometry(bottom[0]->dim(1), bottom[0]->dim(2), bottom[0]->dim(3), params_cfg_);
  const Shape weight_shape{params_cfg_.num_output, g.channels, g.kernel_h, g.kernel_w};
  if (params_.empty()) {
    params_.emplace_back(weight_shape);
    if (params_cfg_.bias) params_.emplace_back(Shape{params_cfg_.num_output});
  } else {
    detail::expect_shape(params_[0].shape(), weight_shape, "convolution weights");
  }
  top[0]->reshape(Shape{bottom[0]->dim(0), params_cfg_.num_output, g.out_h, g.out_w});
}

void ConvolutionLayer::forward(BlobRefs bottom, BlobRefs top) {
  conv_forward(*bottom[0], params_[0], params_cfg_.bias ? &params_[1] : nullptr, params_cfg_, *top[0], &workspace_);
}

void ConvolutionLayer::backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) {
  conv_backward(*top[0], *bottom[0], params_[0], params_cfg_.bias ? &params_[1] : nullptr, params_cfg_,
                propagate_down[0], &workspace_);
}

void ConvolutionLayer::init_params(Rng& rng) {
  const Shape& s = params_[0].shape();
  xavier_fill(params_[0].data(), s[1] * s[2] * s[3], rng);
  if (params_cfg_.bias) params_[1].data().fill(0.0f);
}

// ---- Pooling ----

PoolingLayer::PoolingLayer(std::string name, const PoolParams& params) : Layer(std::move(name)), params_cfg_(params) {}

void PoolingLayer::reshape(BlobRefs bottom, BlobRefs top) {
  detail::expect_rank(bottom[0]->shape(), 4, "pooling bottom");
  const WindowGeometry g = pool_geometry(bottom[0]->dim(1), bottom[0]->dim(2), bottom[0]->dim(3), params_cfg_);
  top[0]->reshape(Shape{bottom[0]->dim(0), bottom[0]->dim(1), g.out_h, g.out_w});
}

void PoolingLayer::forward(BlobRefs bottom, BlobRefs top) { pool_forward(*bottom[0], params_cfg_, *top[0], mask_); }

void PoolingLayer::backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) {
  if (propagate_down[0]) pool_backward(*top[0], mask_, params_cfg_, *bottom[0]);
}

// ---- InnerProduct ----

InnerProductLayer::InnerProductLayer(std::string name, const IpParams& params)
    : Layer(std::move(name)), params_cfg_(params) {}

void InnerProductLayer::reshape(BlobRefs bottom, BlobRefs top) {
  const std::size_t m = bottom[0]->dim(0);
  const std::size_t k = bottom[0]->count() / m;
  const Shape weight_shape = ip_weight_shape(k, params_cfg_);
  if (params_.empty()) {
    params_.emplace_back(weight_shape);
    if (params_cfg_.bias) params_.emplace_back(Shape{params_cfg_.num_output});
  } else {
    detail::expect_shape(params_[0].shape(), weight_shape, "inner product weights");
  }
  top[0]->reshape(Shape{m, params_cfg_.num_output});
}

void InnerProductLayer::forward(BlobRefs bottom, BlobRefs top) {
  ip_forward(*bottom[0], params_[0], params_cfg_.bias ? &params_[1] : nullptr, params_cfg_, *top[0], &workspace_);
}

void InnerProductLayer::backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) {
  ip_backward(*top[0], *bottom[0], params_[0], params_cfg_.bias ? &params_[1] : nullptr, params_cfg_,
              propagate_down[0], &workspace_);
}

void InnerProductLayer::init_params(Rng& rng) {
  const Shape& s = params_[0].shape();
  xavier_fill(params_[0].data(), params_cfg_.transpose ? s[0] : s[1], rng);
  if (params_cfg_.bias) params_[1].data().fill(0.0f);
}

// ---- ReLU ----

ReluLayer::ReluLayer(std::string name, float negative_slope) : Layer(std::move(name)), slope_(negative_slope) {
  if (!std::isfinite(slope_) || slope_ < 0.0f) throw ConfigError("relu: negative_slope must be finite and >= 0");
}

void ReluLayer::reshape(BlobRefs bottom, BlobRefs top) {
  if (top[0] != bottom[0]) top[0]->reshape(bottom[0]->shape());
}

void ReluLayer::forward(BlobRefs bottom, BlobRefs top) {
  if (top[0] == bottom[0]) {
    Tensor& saved = detail::ensure_shape(saved_input_, bottom[0]->shape());
    std::copy(bottom[0]->data().values().begin(), bottom[0]->data().values().end(), saved.values().begin());
  }
  relu_forward(bottom[0]->data().values(), slope_, top[0]->data().values());
}

void ReluLayer::backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) {
  if (!propagate_down[0]) return;
  const Tensor& input = top[0] == bottom[0] ? saved_input_ : bottom[0]->data();
  relu_backward(top[0]->diff().values(), input.values(), slope_, bottom[0]->diff().values());
}

// ---- Softmax ----

void SoftmaxLayer::reshape(BlobRefs bottom, BlobRefs top) {
  if (top[0] != bottom[0]) top[0]->reshape(bottom[0]->shape());
}

void SoftmaxLayer::forward(BlobRefs bottom, BlobRefs top) {
  const std::size_t m = bottom[0]->dim(0);
  const std::size_t d = bottom[0]->count() / m;
  softmax_forward(bottom[0]->data_matrix(m, d), as_matrix(top[0]->data(), m, d));
}

void SoftmaxLayer::backward(BlobRefs top, const std::vector<bool>& propagate_down, BlobRefs bottom) {
  if (!propagate_down[0]) return;
  const std::size_t m = top[0]->dim(0);
  const std::size_t d = top[0]->count() / m;
  softmax_backward(top[0]->data_matrix(m, d), top[0]->diff_matrix(m, d), as_matrix(bottom[0]->diff(), m, d));
}

// ---- SoftmaxWithLoss ----

SoftmaxWithLossLayer::SoftmaxWithLossLayer(std::string name, float loss_weight)
    : Layer(std::move(name)), loss_weight_(loss_weight) {}

void SoftmaxWithLossLayer::reshape(BlobRefs bottom, BlobRefs top) {
  const std::size_t m = bottom[0]->dim(0);
  if (bottom[1]->count() != m) throw ShapeError("softmax loss: label count must equal the batch size");
  detail::ensure_shape(prob_, Shape{m, bottom[0]->count() / m});
  top[0]->reshape(Shape{1});
}

void SoftmaxWithLossLayer::forward(BlobRefs bottom, BlobRefs top) {
  const std::size_t m = prob_.shape()[0];
  const std::size_t d = prob_.shape()[1];
  top[0]->data()[0] = softmax_loss_forward(bottom[0]->data_matrix(m, d), bottom[1]->data().values(),
                                           as_matrix(prob_, m, d));
}

void SoftmaxWithLossLayer::backward(BlobRefs, const std::vector<bool>& propagate_down, BlobRefs bottom) {
  if (!propagate_down[0]) return;
  const std::size_t m = prob_.shape()[0];
  const std::size_t d = prob_.shape()[1];
  softmax_loss_backward(as_matrix(std::as_const(prob_), m, d), bottom[1]->data().values(), loss_weight_,
                        as_matrix(bottom[0]->diff(), m, d));
}

// ---- Accuracy ----

AccuracyLayer::AccuracyLayer(std::string name, std::size_t top_k) : Layer(std::move(name)), top_k_(top_k) {
  if (top_k_ == 0) throw ConfigError("accuracy: top_k must be >= 1");
}

void AccuracyLayer::reshape(BlobRefs bottom, BlobRefs top) {
  const std::size_t m = bottom[0]->dim(0);
  if (bottom[1]->count() != m) throw ShapeError("accuracy: label count must equal the batch size");
  if (top_k_ > bottom[0]->count() / m) throw ConfigError("accuracy: top_k exceeds the number of classes");
  top[0]->reshape(Shape{1});
}

void AccuracyLayer::forward(BlobRefs bottom, BlobRefs top) {
  const std::size_t m = bottom[0]->dim(0);
  top[0]->data()[0] = accuracy(bottom[0]->data_matrix(m, bottom[0]->count() / m), bottom[1]->data().values(), top_k_);
}

// ---- Factory ----

namespace {

struct Window2d {
  std::size_t kernel_h, kernel_w, stride_h, stride_w, pad_h, pad_w;
};

std::pair<std::size_t, std::size_t> pair_keys(KeyReader& keys, const char* both, const char* h, const char* w,
                                              std::size_t fallback) {
  const std::size_t common = keys.take_count(both, fallback);
  return {keys.take_count(h, common), keys.take_count(w, common)};
}

Window2d read_window(KeyReader& keys, const std::string& layer) {
  if (!keys.has("kernel_size") && !(keys.has("kernel_h") && keys.has("kernel_w"))) {
    throw ConfigError("layer '" + layer + "': kernel_size (or kernel_h and kernel_w) is required");
  }
  Window2d w{};
  std::tie(w.kernel_h, w.kernel_w) = pair_keys(keys, "kernel_size", "kernel_h", "kernel_w", 0);
  std::tie(w.stride_h, w.stride_w) = pair_keys(keys, "stride", "stride_h", "stride_w", 1);
  std::tie(w.pad_h, w.pad_w) = pair_keys(keys, "pad", "pad_h", "pad_w", 0);
  if (w.kernel_h == 0 || w.kernel_w == 0 || w.stride_h == 0 || w.stride_w == 0) {
    throw ConfigError("layer '" + layer + "': kernel and stride must be >= 1");
  }
  return w;
}

}  // namespace

std::unique_ptr<Layer> make_layer(const LayerSpec& spec) {
  KeyReader keys(spec.params);
  std::unique_ptr<Layer> layer;
  if (spec.type == "Input") {
    const std::size_t c = keys.require_count("channels");
    const std::size_t h = keys.require_count("height");
    const std::size_t w = keys.require_count("width");
    if (c == 0 || h == 0 || w == 0) throw ConfigError("layer '" + spec.name + "': input extents must be >= 1");
    layer = std::make_unique<InputLayer>(spec.name, c, h, w);
  } else if (spec.type == "Convolution") {
    ConvParams p;
    p.num_output = keys.require_count("num_output");
    const Window2d w = read_window(keys, spec.name);
    p.kernel_h = w.kernel_h;
    p.kernel_w = w.kernel_w;
    p.stride_h = w.stride_h;
    p.stride_w = w.stride_w;
    p.pad_h = w.pad_h;
    p.pad_w = w.pad_w;
    p.bias = keys.take_bool("bias", true);
    if (p.num_output == 0) throw ConfigError("layer '" + spec.name + "': num_output must be >= 1");
    layer = std::make_unique<ConvolutionLayer>(spec.name, p);
  } else if (spec.type == "Pooling") {
    PoolParams p;
    const std::string method = keys.take("method").value_or("max");
    if (method == "max") {
      p.method = PoolMethod::max;
    } else if (method == "average" || method == "ave") {
      p.method = PoolMethod::average;
    } else {
      throw ConfigError("layer '" + spec.name + "': unknown pooling method '" + method + "'");
    }
    const Window2d w = read_window(keys, spec.name);
    p.kernel_h = w.kernel_h;
    p.kernel_w = w.kernel_w;
    p.stride_h = w.stride_h;
    p.stride_w = w.stride_w;
    p.pad_h = w.pad_h;
    p.pad_w = w.pad_w;
    layer = std::make_unique<PoolingLayer>(spec.name, p);
  } else if (spec.type == "InnerProduct") {
    IpParams p;
    p.num_output = keys.require_count("num_output");
    p.bias = keys.take_bool("bias", true);
    p.transpose = keys.take_bool("transpose", false);
    if (p.num_output == 0) throw ConfigError("layer '" + spec.name + "': num_output must be >= 1");
    layer = std::make_unique<InnerProductLayer>(spec.name, p);
  } else if (spec.type == "ReLU") {
    layer = std::make_unique<ReluLayer>(spec.name, static_cast<float>(keys.take_real("negative_slope", 0.0)));
  } else if (spec.type == "Softmax") {
    layer = std::make_unique<SoftmaxLayer>(spec.name);
  } else if (spec.type == "SoftmaxWithLoss") {
    layer = std::make_unique<SoftmaxWithLossLayer>(spec.name, static_cast<float>(keys.take_real("loss_weight", 1.0)));
  } else if (spec.type == "Accuracy") {
    layer = std::make_unique<AccuracyLayer>(spec.name, keys.take_count("top_k", 1));
  } else {
    throw ConfigError("layer '" + spec.name + "': unknown layer type '" + spec.type + "'");
  }
  keys.finish();
  if (spec.bottoms.size() != layer->num_bottoms() || spec.tops.size() != layer->num_tops()) {
    throw ConfigError("layer '" + spec.name + "' (" + spec.type + ") expects " + std::to_string(layer->num_bottoms()) +
                      " bottom(s) and " + std::to_string(layer->num_tops()) + " top(s)");
  }
  return layer;
}

}  // namespace portanet
