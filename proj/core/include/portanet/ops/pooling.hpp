#pragma once

#include <cstddef>
#include <vector>

#include "portanet/blob.hpp"
#include "portanet/ops/convolution.hpp"

namespace portanet {

enum class PoolMethod { max, average };

struct PoolParams {
  PoolMethod method = PoolMethod::max;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
};

/// For each pooled output, the flat index into the bottom blob that produced
/// it (max pooling only).
using PoolMask = std::vector<std::size_t>;

/// Throws ShapeError for pad >= kernel, which could leave a window without
/// any in-bounds input.
WindowGeometry pool_geometry(std::size_t channels, std::size_t height, std::size_t width, const PoolParams& p);

/// Max: window maximum, first position in scan order wins ties, origin
/// recorded in `mask`. Average: mean over the in-bounds part of the window.
/// Parallel over (n, c) planes; window loops run sequentially inside.
void pool_forward(const Blob& bottom, const PoolParams& p, Blob& top, PoolMask& mask);

/// Zeroes bottom.diff, then routes each top gradient back: through the mask
/// (max) or spread evenly over the in-bounds window (average).
void pool_backward(const Blob& top, const PoolMask& mask, const PoolParams& p, Blob& bottom);

}  // namespace portanet
