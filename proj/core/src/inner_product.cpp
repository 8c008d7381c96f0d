#include "portanet/ops/inner_product.hpp"

#include "portanet/linalg.hpp"
#include "scratch.hpp"

namespace portanet {

namespace {

struct IpDims {
  std::size_t m, k, n;
};

IpDims checked(const Blob& bottom, const Blob& weights, const Blob* bias, const IpParams& p, const Shape& top) {
  if (p.num_output == 0) throw ShapeError("inner product: num_output must be >= 1");
  const std::size_t m = bottom.dim(0);
  const IpDims d{m, bottom.count() / m, p.num_output};
  detail::expect_shape(weights.shape(), ip_weight_shape(d.k, p), "inner product weights");
  if (p.bias) {
    if (bias == nullptr) throw ShapeError("inner product: bias enabled but no bias blob");
    detail::expect_shape(bias->shape(), Shape{d.n}, "inner product bias");
  }
  if (top.count() != d.m * d.n || top[0] != d.m) {
    throw ShapeError("inner product top: expected " + Shape{d.m, d.n}.str() + ", got " + top.str());
  }
  return d;
}

}  // namespace

Shape ip_weight_shape(std::size_t inputs, const IpParams& p) {
  return p.transpose ? Shape{inputs, p.num_output} : Shape{p.num_output, inputs};
}

void ip_forward(const Blob& bottom, const Blob& weights, const Blob* bias, const IpParams& p, Blob& top,
                IpWorkspace* workspace) {
  const IpDims d = checked(bottom, weights, bias, p, top.shape());
  IpWorkspace local;
  IpWorkspace& ws = workspace ? *workspace : local;

  ConstMatrixView weights_kn = weights.data_matrix(d.k, d.n);
  if (!p.transpose) {
    Tensor& t = detail::ensure_shape(ws.weights_kn, Shape{d.k, d.n});
    transpose_into(weights.data_matrix(d.n, d.k), as_matrix(t, d.k, d.n));
    weights_kn = as_matrix(std::as_const(t), d.k, d.n);
  }
  MatrixView out = as_matrix(top.data(), d.m, d.n);
  gemm(bottom.data_matrix(d.m, d.k), weights_kn, out);
  if (p.bias) add_vector_to_rows(out, bias->data().values());
}

void ip_backward(const Blob& top, Blob& bottom, Blob& weights, Blob* bias, const IpParams& p, bool propagate_down,
                 IpWorkspace* workspace) {
  const IpDims d = checked(bottom, weights, bias, p, top.shape());
  IpWorkspace local;
  IpWorkspace& ws = workspace ? *workspace : local;
  ConstMatrixView grad = top.diff_matrix(d.m, d.n);

  Tensor& grad_t = detail::ensure_shape(ws.grad_t, Shape{d.n, d.m});
  transpose_into(grad, as_matrix(grad_t, d.n, d.m));
  ConstMatrixView grad_nm = as_matrix(std::as_const(grad_t), d.n, d.m);

  if (!p.transpose) {
    gemm(grad_nm, bottom.data_matrix(d.m, d.k), as_matrix(weights.diff(), d.n, d.k), /*accumulate=*/true);
  } else {
    Tensor& bottom_t = detail::ensure_shape(ws.bottom_t, Shape{d.k, d.m});
    transpose_into(bottom.data_matrix(d.m, d.k), as_matrix(bottom_t, d.k, d.m));
    gemm(as_matrix(std::as_const(bottom_t), d.k, d.m), grad, as_matrix(weights.diff(), d.k, d.n), true);
  }
  if (p.bias) row_sums(grad_nm, bias->diff().values(), /*accumulate=*/true);

  if (!propagate_down) return;
  ConstMatrixView weights_nk = weights.data_matrix(d.n, d.k);
  if (p.transpose) {
    Tensor& t = detail::ensure_shape(ws.weights_nk, Shape{d.n, d.k});
    transpose_into(weights.data_matrix(d.k, d.n), as_matrix(t, d.n, d.k));
    weights_nk = as_matrix(std::as_const(t), d.n, d.k);
  }
  gemm(grad, weights_nk, as_matrix(bottom.diff(), d.m, d.k));
}

}  // namespace portanet
