#include "portanet/ops/pooling.hpp"

#include <algorithm>

#include "portanet/engine.hpp"
#include "scratch.hpp"

namespace portanet {

namespace {

struct Window {
  std::size_t h0, h1, w0, w1;  // in-bounds half-open ranges
};

inline Window window_at(const WindowGeometry& g, std::size_t ho, std::size_t wo) {
  // Start may lie in the padding; clamp in signed space.
  const auto hs = static_cast<std::ptrdiff_t>(ho * g.stride_h) - static_cast<std::ptrdiff_t>(g.pad_h);
  const auto ws = static_cast<std::ptrdiff_t>(wo * g.stride_w) - static_cast<std::ptrdiff_t>(g.pad_w);
  const auto he = std::min<std::ptrdiff_t>(hs + static_cast<std::ptrdiff_t>(g.kernel_h),
                                           static_cast<std::ptrdiff_t>(g.height));
  const auto we = std::min<std::ptrdiff_t>(ws + static_cast<std::ptrdiff_t>(g.kernel_w),
                                           static_cast<std::ptrdiff_t>(g.width));
  return {static_cast<std::size_t>(std::max<std::ptrdiff_t>(hs, 0)), static_cast<std::size_t>(he),
          static_cast<std::size_t>(std::max<std::ptrdiff_t>(ws, 0)), static_cast<std::size_t>(we)};
}

WindowGeometry checked(const Blob& bottom, const PoolParams& p, const Shape& top_shape) {
  detail::expect_rank(bottom.shape(), 4, "pooling bottom");
  const WindowGeometry g = pool_geometry(bottom.dim(1), bottom.dim(2), bottom.dim(3), p);
  detail::expect_shape(top_shape, Shape{bottom.dim(0), bottom.dim(1), g.out_h, g.out_w}, "pooling top");
  return g;
}

}  // namespace

WindowGeometry pool_geometry(std::size_t channels, std::size_t height, std::size_t width, const PoolParams& p) {
  if (p.pad_h >= std::max<std::size_t>(p.kernel_h, 1) || p.pad_w >= std::max<std::size_t>(p.kernel_w, 1)) {
    throw ShapeError("pooling: padding must be smaller than the kernel");
  }
  return WindowGeometry::make(channels, height, width, p.kernel_h, p.kernel_w, p.stride_h, p.stride_w, p.pad_h,
                              p.pad_w);
}

void pool_forward(const Blob& bottom, const PoolParams& p, Blob& top, PoolMask& mask) {
  const WindowGeometry g = checked(bottom, p, top.shape());
  const bool is_max = p.method == PoolMethod::max;
  if (is_max) mask.assign(top.count(), 0);
  const std::size_t in_plane = g.height * g.width;
  const std::size_t out_plane = g.out_h * g.out_w;
  const float* src = bottom.data().data();
  float* dst = top.data().data();
  std::size_t* origin = is_max ? mask.data() : nullptr;

  // Outer (n, c) loop only; each plane is owned by one invocation.
  for_each_index(bottom.dim(0) * bottom.dim(1), [=](std::size_t plane) {
    const float* in = src + plane * in_plane;
    float* out = dst + plane * out_plane;
    for (std::size_t ho = 0; ho < g.out_h; ++ho) {
      for (std::size_t wo = 0; wo < g.out_w; ++wo) {
        const Window win = window_at(g, ho, wo);
        const std::size_t o = ho * g.out_w + wo;
        if (is_max) {
          std::size_t best = win.h0 * g.width + win.w0;
          float best_value = in[best];
          for (std::size_t h = win.h0; h < win.h1; ++h) {
            for (std::size_t w = win.w0; w < win.w1; ++w) {
              const std::size_t idx = h * g.width + w;
              if (in[idx] > best_value) {
                best_value = in[idx];
                best = idx;
              }
            }
          }
          out[o] = best_value;
          origin[plane * out_plane + o] = plane * in_plane + best;
        } else {
          float sum = 0.0f;
          for (std::size_t h = win.h0; h < win.h1; ++h) {
            for (std::size_t w = win.w0; w < win.w1; ++w) sum += in[h * g.width + w];
          }
          out[o] = sum / static_cast<float>((win.h1 - win.h0) * (win.w1 - win.w0));
        }
      }
    }
  });
}

void pool_backward(const Blob& top, const PoolMask& mask, const PoolParams& p, Blob& bottom) {
  const WindowGeometry g = checked(bottom, p, top.shape());
  const bool is_max = p.method == PoolMethod::max;
  if (is_max && mask.size() != top.count()) throw Error("pooling: mask does not match the top blob");
  const std::size_t in_plane = g.height * g.width;
  const std::size_t out_plane = g.out_h * g.out_w;
  const float* grad = top.diff().data();
  float* dst = bottom.diff().data();
  const std::size_t* origin = is_max ? mask.data() : nullptr;

  for_each_index(bottom.dim(0) * bottom.dim(1), [=](std::size_t plane) {
    float* in_grad = dst + plane * in_plane;
    std::fill(in_grad, in_grad + in_plane, 0.0f);
    const float* out_grad = grad + plane * out_plane;
    if (is_max) {
      const std::size_t lo = plane * in_plane;
      for (std::size_t o = 0; o < out_plane; ++o) {
        const std::size_t src = origin[plane * out_plane + o];
        if (src < lo || src >= lo + in_plane) throw Error("pooling: mask index outside its plane");
        in_grad[src - lo] += out_grad[o];
      }
      return;
    }
    for (std::size_t ho = 0; ho < g.out_h; ++ho) {
      for (std::size_t wo = 0; wo < g.out_w; ++wo) {
        const Window win = window_at(g, ho, wo);
        const float share =
            out_grad[ho * g.out_w + wo] / static_cast<float>((win.h1 - win.h0) * (win.w1 - win.w0));
        for (std::size_t h = win.h0; h < win.h1; ++h) {
          for (std::size_t w = win.w0; w < win.w1; ++w) in_grad[h * g.width + w] += share;
        }
      }
    }
  });
}

}  // namespace portanet
