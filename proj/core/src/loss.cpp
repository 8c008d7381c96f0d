#include "portanet/ops/loss.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "portanet/engine.hpp"
#include "portanet/ops/activation.hpp"

namespace portanet {

void check_labels(std::span<const float> labels, std::size_t classes) {
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const float l = labels[i];
    if (!(l >= 0.0f) || l >= static_cast<float>(classes) || std::floor(l) != l) {
      throw InputError("label " + std::to_string(l) + " at sample " + std::to_string(i) + " is not a class in [0, " +
                       std::to_string(classes) + ")");
    }
  }
}

float softmax_loss_forward(ConstMatrixView scores, std::span<const float> labels, MatrixView prob) {
  if (labels.size() != scores.rows()) throw ShapeError("softmax loss: one label per row required");
  check_labels(labels, scores.cols());
  softmax_forward(scores, prob);

  // Per-row terms are produced in parallel, then summed here in row order.
  std::vector<float> terms(scores.rows());
  const float* p = prob.data();
  const float* lab = labels.data();
  float* out = terms.data();
  const std::size_t cols = scores.cols();
  for_each_index(terms.size(), [=](std::size_t i) {
    const auto label = static_cast<std::size_t>(lab[i]);
    out[i] = -std::log(std::max(p[i * cols + label], kMinProbability));
  });
  double sum = 0.0;
  for (float t : terms) sum += t;
  return static_cast<float>(sum / static_cast<double>(scores.rows()));
}

void softmax_loss_backward(ConstMatrixView prob, std::span<const float> labels, float loss_weight,
                           MatrixView bottom_diff) {
  if (labels.size() != prob.rows()) throw ShapeError("softmax loss: one label per row required");
  if (bottom_diff.rows() != prob.rows() || bottom_diff.cols() != prob.cols()) {
    throw ShapeError("softmax loss backward: gradient shape differs from probabilities");
  }
  check_labels(labels, prob.cols());
  check_disjoint(bottom_diff.values(), prob.values(), "softmax_loss_backward");
  const float scale = loss_weight / static_cast<float>(prob.rows());
  const float* p = prob.data();
  const float* lab = labels.data();
  const std::size_t cols = prob.cols();
  for_each_row(bottom_diff, [=](std::size_t i, std::span<float> out) {
    const auto label = static_cast<std::size_t>(lab[i]);
    for (std::size_t j = 0; j < cols; ++j) {
      out[j] = scale * (p[i * cols + j] - (j == label ? 1.0f : 0.0f));
    }
  });
}

float accuracy(ConstMatrixView scores, std::span<const float> labels, std::size_t top_k) {
  if (labels.size() != scores.rows()) throw ShapeError("accuracy: one label per row required");
  if (top_k == 0 || top_k > scores.cols()) {
    throw InputError("accuracy: top_k must be in [1, " + std::to_string(scores.cols()) + "]");
  }
  check_labels(labels, scores.cols());
  std::vector<unsigned char> hit(scores.rows());
  const float* s = scores.data();
  const float* lab = labels.data();
  unsigned char* out = hit.data();
  const std::size_t cols = scores.cols();
  for_each_index(hit.size(), [=](std::size_t i) {
    const float* row = s + i * cols;
    const auto label = static_cast<std::size_t>(lab[i]);
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < cols; ++j) {
      if (row[j] > row[label] || (row[j] == row[label] && j < label)) ++ahead;
    }
    out[i] = ahead < top_k ? 1 : 0;
  });
  std::size_t correct = 0;
  for (unsigned char h : hit) correct += h;
  return static_cast<float>(static_cast<double>(correct) / static_cast<double>(scores.rows()));
}

}  // namespace portanet
