#pragma once

#include <cstddef>
#include <span>

#include "portanet/tensor.hpp"

namespace portanet {

/// Smallest argument passed to ln() by the loss.
inline constexpr float kMinProbability = 1e-37f;

/// Validates that every label is an integer in [0, classes). Throws InputError.
void check_labels(std::span<const float> labels, std::size_t classes);

/// Softmax of the M×D scores into `prob`, then −(1/M)·Σ_i ln p_i[label_i].
float softmax_loss_forward(ConstMatrixView scores, std::span<const float> labels, MatrixView prob);

/// bottom_diff[i,j] = loss_weight·(p[i,j] − [j == label_i]) / M.
void softmax_loss_backward(ConstMatrixView prob, std::span<const float> labels, float loss_weight,
                           MatrixView bottom_diff);

/// Fraction of rows whose label is among the top-k scores. Rank is by
/// descending score; equal scores rank the lower class index first.
float accuracy(ConstMatrixView scores, std::span<const float> labels, std::size_t top_k);

}  // namespace portanet
