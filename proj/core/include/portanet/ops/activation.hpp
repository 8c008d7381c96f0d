#pragma once

#include <span>

#include "portanet/tensor.hpp"

namespace portanet {

/// Leaky ReLU: top = bottom where bottom > 0, slope·bottom elsewhere.
/// `top` may be the same storage as `bottom`.
void relu_forward(std::span<const float> bottom, float slope, std::span<float> top);

/// bottom_diff = top_diff · (bottom_data > 0 ? 1 : slope). `bottom_data` must
/// be the pre-activation input. `bottom_diff` may share storage with `top_diff`.
void relu_backward(std::span<const float> top_diff, std::span<const float> bottom_data, float slope,
                   std::span<float> bottom_diff);

/// Row-wise softmax of an M×D matrix, computed as exp(x − max) / Σ exp(x − max).
/// In place is allowed.
void softmax_forward(ConstMatrixView bottom, MatrixView top);

/// bottom_diff[i] = p[i]·(top_diff[i] − Σ_j top_diff[j]·p[j]) per row.
void softmax_backward(ConstMatrixView top_data, ConstMatrixView top_diff, MatrixView bottom_diff);

}  // namespace portanet
