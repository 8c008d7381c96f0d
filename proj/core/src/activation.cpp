#include "portanet/ops/activation.hpp"

#include <cmath>
#include <string>

#include "portanet/engine.hpp"

namespace portanet {

namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": sizes " + std::to_string(a) + " and " + std::to_string(b));
}

void require_same_dims(ConstMatrixView a, ConstMatrixView b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(std::string(what) + ": matrix shapes differ");
}

}  // namespace

void relu_forward(std::span<const float> bottom, float slope, std::span<float> top) {
  require_same_size(bottom.size(), top.size(), "relu_forward");
  if (!std::isfinite(slope) || slope < 0.0f) throw InputError("relu: negative_slope must be finite and >= 0");
  if (top.data() != bottom.data()) check_disjoint(top, bottom, "relu_forward");
  const float* in = bottom.data();
  float* out = top.data();
  for_each_block(bottom.size(), [=](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = in[i] > 0.0f ? in[i] : slope * in[i];
  });
}

void relu_backward(std::span<const float> top_diff, std::span<const float> bottom_data, float slope,
                   std::span<float> bottom_diff) {
  require_same_size(top_diff.size(), bottom_data.size(), "relu_backward");
  require_same_size(top_diff.size(), bottom_diff.size(), "relu_backward");
  if (bottom_diff.data() != top_diff.data()) check_disjoint(bottom_diff, top_diff, "relu_backward");
  check_disjoint(bottom_diff, bottom_data, "relu_backward");
  const float* grad = top_diff.data();
  const float* in = bottom_data.data();
  float* out = bottom_diff.data();
  for_each_block(top_diff.size(), [=](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) out[i] = grad[i] * (in[i] > 0.0f ? 1.0f : slope);
  });
}

void softmax_forward(ConstMatrixView bottom, MatrixView top) {
  require_same_dims(bottom, top, "softmax_forward");
  if (top.data() != bottom.data()) check_disjoint(top.values(), bottom.values(), "softmax_forward");
  const float* in = bottom.data();
  const std::size_t cols = bottom.cols();
  for_each_row(top, [=](std::size_t i, std::span<float> out) {
    const float* x = in + i * cols;
    float max = x[0];
    for (std::size_t j = 1; j < cols; ++j) max = std::max(max, x[j]);
    float sum = 0.0f;
    for (std::size_t j = 0; j < cols; ++j) {
      out[j] = std::exp(x[j] - max);
      sum += out[j];
    }
    for (std::size_t j = 0; j < cols; ++j) out[j] /= sum;
  });
}

void softmax_backward(ConstMatrixView top_data, ConstMatrixView top_diff, MatrixView bottom_diff) {
  require_same_dims(top_data, top_diff, "softmax_backward");
  require_same_dims(top_data, bottom_diff, "softmax_backward");
  check_disjoint(bottom_diff.values(), top_data.values(), "softmax_backward");
  if (bottom_diff.data() != top_diff.data()) check_disjoint(bottom_diff.values(), top_diff.values(), "softmax_backward");
  const float* p = top_data.data();
  const float* g = top_diff.data();
  const std::size_t cols = top_data.cols();
  for_each_row(bottom_diff, [=](std::size_t i, std::span<float> out) {
    const float* pr = p + i * cols;
    const float* gr = g + i * cols;
    float dot = 0.0f;
    for (std::size_t j = 0; j < cols; ++j) dot += gr[j] * pr[j];
    for (std::size_t j = 0; j < cols; ++j) out[j] = pr[j] * (gr[j] - dot);
  });
}

}  // namespace portanet
