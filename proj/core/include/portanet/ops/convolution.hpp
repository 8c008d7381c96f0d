#pragma once

#include <cstddef>
#include <span>

#include "portanet/blob.hpp"
#include "portanet/tensor.hpp"

namespace portanet {

/// 2-D convolution settings. Groups and dilation are not supported.
struct ConvParams {
  std::size_t num_output = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  bool bias = true;
};

/// Sliding-window geometry shared by im2col, col2im and pooling.
/// Output extents use floor division: (in + 2·pad − kernel) / stride + 1.
struct WindowGeometry {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride_h = 1;
  std::size_t stride_w = 1;
  std::size_t pad_h = 0;
  std::size_t pad_w = 0;
  std::size_t out_h = 0;
  std::size_t out_w = 0;

  static WindowGeometry make(std::size_t channels, std::size_t height, std::size_t width, std::size_t kernel_h,
                             std::size_t kernel_w, std::size_t stride_h, std::size_t stride_w, std::size_t pad_h,
                             std::size_t pad_w);

  std::size_t image_size() const noexcept { return channels * height * width; }
  /// Rows of the lowered matrix: one per (channel, kernel row, kernel col).
  std::size_t col_rows() const noexcept { return channels * kernel_h * kernel_w; }
  /// Columns of the lowered matrix: one per output position.
  std::size_t col_cols() const noexcept { return out_h * out_w; }
};

WindowGeometry conv_geometry(std::size_t channels, std::size_t height, std::size_t width, const ConvParams& p);

/// Lowers one C×H×W image into a (C·kh·kw)×(H_out·W_out) matrix. Column t
/// holds the patch under output position t in (c, kh, kw) order; padding
/// reads as zero. One engine invocation per output element.
void im2col(std::span<const float> image, const WindowGeometry& g, std::span<float> cols);
Tensor im2col(const Tensor& image, const ConvParams& p);

/// Adjoint of im2col. Each image element gathers every column entry that
/// im2col copied out of it, so invocations never write shared memory.
void col2im(std::span<const float> cols, const WindowGeometry& g, std::span<float> image);
Tensor col2im(const Tensor& cols, const ConvParams& p, std::size_t channels, std::size_t height, std::size_t width);

/// Per-layer scratch buffers, kept between batches.
struct ConvWorkspace {
  Tensor col;
  Tensor col_t;
  Tensor weights_t;
  Tensor back_col;
};

/// top(n) = W·im2col(bottom(n)) (+ bias per filter row).
/// bottom N×C×H×W, weights F×C×kh×kw, bias F, top N×F×H_out×W_out.
void conv_forward(const Blob& bottom, const Blob& weights, const Blob* bias, const ConvParams& p, Blob& top,
                  ConvWorkspace* workspace = nullptr);

/// weights.diff += G·colᵀ, bias.diff += row sums of G, bottom.diff = col2im(Wᵀ·G)
/// for every image, with G = top.diff(n). bottom.diff is skipped when
/// `propagate_down` is false.
void conv_backward(const Blob& top, Blob& bottom, Blob& weights, Blob* bias, const ConvParams& p,
                   bool propagate_down = true, ConvWorkspace* workspace = nullptr);

}  // namespace portanet
