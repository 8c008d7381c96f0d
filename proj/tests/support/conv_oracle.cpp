#include "conv_oracle.hpp"

#include <algorithm>
#include <cmath>

namespace portanet::testing {

std::vector<float> direct_convolution(std::span<const float> bottom, std::size_t n, std::size_t c, std::size_t h,
                                      std::size_t w, std::span<const float> weights, std::span<const float> bias,
                                      const ConvParams& p) {
  const long oh = (static_cast<long>(h + 2 * p.pad_h) - static_cast<long>(p.kernel_h)) / static_cast<long>(p.stride_h) + 1;
  const long ow = (static_cast<long>(w + 2 * p.pad_w) - static_cast<long>(p.kernel_w)) / static_cast<long>(p.stride_w) + 1;
  const std::size_t f_count = p.num_output;
  std::vector<float> top(n * f_count * static_cast<std::size_t>(oh * ow));
  for (std::size_t img = 0; img < n; ++img) {
    for (std::size_t f = 0; f < f_count; ++f) {
      for (long y = 0; y < oh; ++y) {
        for (long x = 0; x < ow; ++x) {
          double sum = bias.empty() ? 0.0 : bias[f];
          for (std::size_t ch = 0; ch < c; ++ch) {
            for (std::size_t ki = 0; ki < p.kernel_h; ++ki) {
              for (std::size_t kj = 0; kj < p.kernel_w; ++kj) {
                const long iy = y * static_cast<long>(p.stride_h) + static_cast<long>(ki) - static_cast<long>(p.pad_h);
                const long ix = x * static_cast<long>(p.stride_w) + static_cast<long>(kj) - static_cast<long>(p.pad_w);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(h) || ix >= static_cast<long>(w)) continue;
                const float in = bottom[((img * c + ch) * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix)];
                const float wt = weights[((f * c + ch) * p.kernel_h + ki) * p.kernel_w + kj];
                sum += static_cast<double>(in) * wt;
              }
            }
          }
          top[((img * f_count + f) * static_cast<std::size_t>(oh) + static_cast<std::size_t>(y)) * static_cast<std::size_t>(ow) +
              static_cast<std::size_t>(x)] = static_cast<float>(sum);
        }
      }
    }
  }
  return top;
}

namespace {

template <typename Visit>
void for_each_patch_entry(const WindowGeometry& g, Visit visit) {
  const std::size_t spatial = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kernel_h; ++ki) {
      for (std::size_t kj = 0; kj < g.kernel_w; ++kj) {
        const std::size_t row = (c * g.kernel_h + ki) * g.kernel_w + kj;
        for (std::size_t y = 0; y < g.out_h; ++y) {
          for (std::size_t x = 0; x < g.out_w; ++x) {
            const long iy = static_cast<long>(y * g.stride_h + ki) - static_cast<long>(g.pad_h);
            const long ix = static_cast<long>(x * g.stride_w + kj) - static_cast<long>(g.pad_w);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) && ix < static_cast<long>(g.width);
            const std::size_t pixel =
                inside ? (c * g.height + static_cast<std::size_t>(iy)) * g.width + static_cast<std::size_t>(ix) : 0;
            visit(row * spatial + y * g.out_w + x, inside, pixel);
          }
        }
      }
    }
  }
}

}  // namespace

std::vector<float> naive_im2col(std::span<const float> image, const WindowGeometry& g) {
  std::vector<float> cols(g.col_rows() * g.col_cols(), 0.0f);
  for_each_patch_entry(g, [&](std::size_t at, bool inside, std::size_t pixel) {
    if (inside) cols[at] = image[pixel];
  });
  return cols;
}

std::vector<float> naive_col2im(std::span<const float> cols, const WindowGeometry& g) {
  std::vector<double> acc(g.image_size(), 0.0);
  for_each_patch_entry(g, [&](std::size_t at, bool inside, std::size_t pixel) {
    if (inside) acc[pixel] += cols[at];
  });
  return {acc.begin(), acc.end()};
}

double relative_error(std::span<const float> a, std::span<const float> b) {
  double diff = 0.0;
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
    diff = std::max(diff, std::abs(static_cast<double>(a[i]) - b[i]));
    scale = std::max(scale, std::abs(static_cast<double>(b[i])));
  }
  if (a.size() != b.size()) return INFINITY;
  return diff / std::max(scale, 1e-30);
}

}  // namespace portanet::testing
