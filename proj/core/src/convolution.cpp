#include "portanet/ops/convolution.hpp"

#include <string>

#include "portanet/engine.hpp"
#include "portanet/linalg.hpp"
#include "scratch.hpp"

namespace portanet {

WindowGeometry WindowGeometry::make(std::size_t channels, std::size_t height, std::size_t width,
                                    std::size_t kernel_h, std::size_t kernel_w, std::size_t stride_h,
                                    std::size_t stride_w, std::size_t pad_h, std::size_t pad_w) {
  if (channels == 0 || height == 0 || width == 0) throw ShapeError("window: empty input");
  if (kernel_h == 0 || kernel_w == 0) throw ShapeError("window: kernel extents must be >= 1");
  if (stride_h == 0 || stride_w == 0) throw ShapeError("window: stride must be >= 1");
  if (height + 2 * pad_h < kernel_h || width + 2 * pad_w < kernel_w) {
    throw ShapeError("window: kernel " + std::to_string(kernel_h) + "x" + std::to_string(kernel_w) +
                     " does not fit padded input " + std::to_string(height + 2 * pad_h) + "x" +
                     std::to_string(width + 2 * pad_w));
  }
  WindowGeometry g;
  g.channels = channels;
  g.height = height;
  g.width = width;
  g.kernel_h = kernel_h;
  g.kernel_w = kernel_w;
  g.stride_h = stride_h;
  g.stride_w = stride_w;
  g.pad_h = pad_h;
  g.pad_w = pad_w;
  g.out_h = (height + 2 * pad_h - kernel_h) / stride_h + 1;
  g.out_w = (width + 2 * pad_w - kernel_w) / stride_w + 1;
  return g;
}

WindowGeometry conv_geometry(std::size_t channels, std::size_t height, std::size_t width, const ConvParams& p) {
  return WindowGeometry::make(channels, height, width, p.kernel_h, p.kernel_w, p.stride_h, p.stride_w, p.pad_h,
                              p.pad_w);
}

void im2col(std::span<const float> image, const WindowGeometry& g, std::span<float> cols) {
  if (image.size() != g.image_size() || cols.size() != g.col_rows() * g.col_cols()) {
    throw ShapeError("im2col: buffer sizes do not match the geometry");
  }
  check_disjoint(cols, image, "im2col");
  const float* src = image.data();
  float* dst = cols.data();
  const WindowGeometry geo = g;
  const std::size_t spatial = g.col_cols();
  const std::size_t window = g.kernel_h * g.kernel_w;

  // One flat index per output element: i = row·spatial + position. Each block
  // decodes its first index once and then walks the coordinates forward.
  for_each_block(cols.size(), [=](std::size_t begin, std::size_t end) {
    std::size_t row = begin / spatial;
    std::size_t pos = begin - row * spatial;
    std::size_t ho = pos / geo.out_w;
    std::size_t wo = pos - ho * geo.out_w;
    std::size_t i = begin;
    while (i < end) {
      const std::size_t c = row / window;
      const std::size_t k = row - c * window;
      const std::size_t ki = k / geo.kernel_w;
      const std::size_t kj = k - ki * geo.kernel_w;
      const float* plane = src + c * geo.height * geo.width;
      for (; ho < geo.out_h && i < end; ++ho, wo = 0) {
        // Unsigned wrap-around makes negative (padding) coordinates fail the bound test.
        const std::size_t h = ho * geo.stride_h + ki - geo.pad_h;
        const bool row_ok = h < geo.height;
        for (; wo < geo.out_w && i < end; ++wo, ++i) {
          const std::size_t w = wo * geo.stride_w + kj - geo.pad_w;
          dst[i] = (row_ok && w < geo.width) ? plane[h * geo.width + w] : 0.0f;
        }
        if (wo < geo.out_w) break;
      }
      ++row;
      ho = 0;
      wo = 0;
    }
  });
}

Tensor im2col(const Tensor& image, const ConvParams& p) {
  detail::expect_rank(image.shape(), 3, "im2col");
  const WindowGeometry g = conv_geometry(image.shape()[0], image.shape()[1], image.shape()[2], p);
  Tensor cols(Shape{g.col_rows(), g.col_cols()});
  im2col(image.values(), g, cols.values());
  return cols;
}

void col2im(std::span<const float> cols, const WindowGeometry& g, std::span<float> image) {
  if (image.size() != g.image_size() || cols.size() != g.col_rows() * g.col_cols()) {
    throw ShapeError("col2im: buffer sizes do not match the geometry");
  }
  check_disjoint(image, cols, "col2im");
  const float* src = cols.data();
  float* dst = image.data();
  const WindowGeometry geo = g;
  const std::size_t spatial = g.col_cols();
  const std::size_t plane = g.height * g.width;

  // One flat index per image element; kernel offsets are visited in
  // ascending (ki, kj) order, skipping those that no window reaches.
  for_each_index(image.size(), [=](std::size_t i) {
    const std::size_t c = i / plane;
    const std::size_t rem = i - c * plane;
    const std::size_t h = rem / geo.width;
    const std::size_t w = rem - h * geo.width;
    const std::size_t hp = h + geo.pad_h;
    const std::size_t wp = w + geo.pad_w;
    const std::size_t reach_h = (geo.out_h - 1) * geo.stride_h;
    const std::size_t reach_w = (geo.out_w - 1) * geo.stride_w;
    std::size_t ki0 = hp > reach_h ? hp - reach_h : 0;
    ki0 += (hp - ki0) % geo.stride_h;
    std::size_t kj0 = wp > reach_w ? wp - reach_w : 0;
    kj0 += (wp - kj0) % geo.stride_w;
    float sum = 0.0f;
    for (std::size_t ki = ki0; ki < geo.kernel_h && ki <= hp; ki += geo.stride_h) {
      const std::size_t ho = (hp - ki) / geo.stride_h;
      const float* src_row = src + (c * geo.kernel_h + ki) * geo.kernel_w * spatial + ho * geo.out_w;
      for (std::size_t kj = kj0; kj < geo.kernel_w && kj <= wp; kj += geo.stride_w) {
        sum += src_row[kj * spatial + (wp - kj) / geo.stride_w];
      }
    }
    dst[i] = sum;
  });
}

Tensor col2im(const Tensor& cols, const ConvParams& p, std::size_t channels, std::size_t height, std::size_t width) {
  const WindowGeometry g = conv_geometry(channels, height, width, p);
  detail::expect_shape(cols.shape(), Shape{g.col_rows(), g.col_cols()}, "col2im");
  Tensor image(Shape{channels, height, width});
  col2im(cols.values(), g, image.values());
  return image;
}

namespace {

WindowGeometry checked_geometry(const Blob& bottom, const Blob& weights, const Blob* bias, const ConvParams& p,
                                const Shape& top_shape) {
  detail::expect_rank(bottom.shape(), 4, "convolution bottom");
  const std::size_t n = bottom.dim(0);
  const WindowGeometry g = conv_geometry(bottom.dim(1), bottom.dim(2), bottom.dim(3), p);
  if (p.num_output == 0) throw ShapeError("convolution: num_output must be >= 1");
  detail::expect_shape(weights.shape(), Shape{p.num_output, g.channels, g.kernel_h, g.kernel_w},
                       "convolution weights");
  if (p.bias) {
    if (bias == nullptr) throw ShapeError("convolution: bias enabled but no bias blob");
    detail::expect_shape(bias->shape(), Shape{p.num_output}, "convolution bias");
  }
  detail::expect_shape(top_shape, Shape{n, p.num_output, g.out_h, g.out_w}, "convolution top");
  return g;
}

}  // namespace

void conv_forward(const Blob& bottom, const Blob& weights, const Blob* bias, const ConvParams& p, Blob& top,
                  ConvWorkspace* workspace) {
  const WindowGeometry g = checked_geometry(bottom, weights, bias, p, top.shape());
  ConvWorkspace local;
  ConvWorkspace& ws = workspace ? *workspace : local;
  Tensor& col = detail::ensure_shape(ws.col, Shape{g.col_rows(), g.col_cols()});

  const std::size_t images = bottom.dim(0);
  const std::size_t filters = p.num_output;
  const std::size_t out_size = filters * g.col_cols();
  ConstMatrixView w = weights.data_matrix(filters, g.col_rows());
  for (std::size_t n = 0; n < images; ++n) {
    im2col(bottom.data().values().subspan(n * g.image_size(), g.image_size()), g, col.values());
    MatrixView out = as_matrix(top.data().values().subspan(n * out_size, out_size), filters, g.col_cols());
    gemm(w, as_matrix(col, g.col_rows(), g.col_cols()), out);
    if (p.bias) {
      const float* b = bias->data().data();
      for_each_row(out, [=](std::size_t f, std::span<float> row) {
        for (float& v : row) v += b[f];
      });
    }
  }
}

void conv_backward(const Blob& top, Blob& bottom, Blob& weights, Blob* bias, const ConvParams& p,
                   bool propagate_down, ConvWorkspace* workspace) {
  const WindowGeometry g = checked_geometry(bottom, weights, bias, p, top.shape());
  ConvWorkspace local;
  ConvWorkspace& ws = workspace ? *workspace : local;
  const std::size_t rows = g.col_rows();
  const std::size_t spatial = g.col_cols();
  const std::size_t filters = p.num_output;
  Tensor& col = detail::ensure_shape(ws.col, Shape{rows, spatial});
  Tensor& col_t = detail::ensure_shape(ws.col_t, Shape{spatial, rows});
  Tensor& back_col = detail::ensure_shape(ws.back_col, Shape{rows, spatial});
  Tensor& weights_t = detail::ensure_shape(ws.weights_t, Shape{rows, filters});
  if (propagate_down) transpose_into(weights.data_matrix(filters, rows), as_matrix(weights_t, rows, filters));

  MatrixView weight_diff = as_matrix(weights.diff(), filters, rows);
  const std::size_t out_size = filters * spatial;
  for (std::size_t n = 0; n < bottom.dim(0); ++n) {
    ConstMatrixView grad = as_matrix(top.diff().values().subspan(n * out_size, out_size), filters, spatial);
    im2col(bottom.data().values().subspan(n * g.image_size(), g.image_size()), g, col.values());
    transpose_into(as_matrix(std::as_const(col), rows, spatial), as_matrix(col_t, spatial, rows));
    gemm(grad, as_matrix(std::as_const(col_t), spatial, rows), weight_diff, /*accumulate=*/true);
    if (p.bias) row_sums(grad, bias->diff().values(), /*accumulate=*/true);
    if (propagate_down) {
      gemm(as_matrix(std::as_const(weights_t), rows, filters), grad, as_matrix(back_col, rows, spatial));
      col2im(back_col.values(), g, bottom.diff().values().subspan(n * g.image_size(), g.image_size()));
    }
  }
}

}  // namespace portanet
