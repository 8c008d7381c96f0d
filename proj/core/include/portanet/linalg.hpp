#pragma once

#include <span>

#include "portanet/tensor.hpp"

namespace portanet {

/// C = A·B, or C += A·B when `accumulate` is set.
///
/// A is M×K, B is K×N, C is M×N. Rows of C are split across the engine; every
/// element is summed over k in ascending order starting from 0 (or from its
/// previous value when accumulating), so the result is independent of the
/// policy and equal to the naive triple loop.
void gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate = false);

/// C[i,j] += v[j] for every row i.
void add_vector_to_rows(MatrixView c, std::span<const float> v);

/// Y = alpha·X + beta·Y, elementwise.
void axpby(float alpha, const Tensor& x, float beta, Tensor& y);
void axpby(float alpha, std::span<const float> x, float beta, std::span<float> y);

/// out[i] = Σ_j m[i,j], summed left to right within each row.
void row_sums(ConstMatrixView m, std::span<float> out, bool accumulate = false);

}  // namespace portanet
