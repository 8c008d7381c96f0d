#pragma once

#include <cstddef>

#include "portanet/blob.hpp"

namespace portanet {

struct IpParams {
  std::size_t num_output = 0;
  bool bias = true;
  /// false: weights stored [N, K] (one row per output). true: stored [K, N].
  bool transpose = false;
};

struct IpWorkspace {
  Tensor weights_kn;  // weights as K×N for the forward product
  Tensor weights_nk;  // weights as N×K for the backward product (transpose=true only)
  Tensor grad_t;      // top.diff transposed, N×M
  Tensor bottom_t;    // bottom.data transposed, K×M (transpose=true only)
};

/// Weight blob shape for `inputs` features.
Shape ip_weight_shape(std::size_t inputs, const IpParams& p);

/// top (M×N) = bottom (M×K) · Wᵀ, then the bias vector is added to every row.
/// M is bottom.dim(0); K is the product of the remaining bottom extents.
void ip_forward(const Blob& bottom, const Blob& weights, const Blob* bias, const IpParams& p, Blob& top,
                IpWorkspace* workspace = nullptr);

/// weights.diff += top.diffᵀ·bottom.data, bias.diff[j] += Σ_i top.diff[i,j],
/// bottom.diff = top.diff·W.
void ip_backward(const Blob& top, Blob& bottom, Blob& weights, Blob* bias, const IpParams& p,
                 bool propagate_down = true, IpWorkspace* workspace = nullptr);

}  // namespace portanet
