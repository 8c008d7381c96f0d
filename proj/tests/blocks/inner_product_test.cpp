#include <gtest/gtest.h>

#include "gradient_check.hpp"
#include "portanet/engine.hpp"
#include "portanet/error.hpp"
#include "portanet/layer.hpp"
#include "portanet/ops/inner_product.hpp"

namespace portanet {
namespace {

using testing::check_layer;
using testing::fill_uniform;

IpParams ip(std::size_t n, bool bias = true, bool transpose = false) {
  IpParams p;
  p.num_output = n;
  p.bias = bias;
  p.transpose = transpose;
  return p;
}

TEST(InnerProduct, HandExample) {
  Blob bottom(Shape{1, 2}), weights(Shape{1, 2}), bias(Shape{1}), top(Shape{1, 1});
  bottom.data()[0] = 1;
  bottom.data()[1] = 2;
  weights.data()[0] = 3;
  weights.data()[1] = 4;
  bias.data()[0] = 5;
  ip_forward(bottom, weights, &bias, ip(1), top);
  EXPECT_EQ(top.data()[0], 16.0f);
}

TEST(InnerProduct, IdentityWeights) {
  Rng rng(51);
  Blob bottom(Shape{3, 4}), weights(Shape{4, 4}), top(Shape{3, 4});
  fill_uniform(bottom.data().values(), rng);
  for (std::size_t i = 0; i < 4; ++i) weights.data().at({i, i}) = 1.0f;
  ip_forward(bottom, weights, nullptr, ip(4, false), top);
  EXPECT_TRUE(std::equal(top.data().values().begin(), top.data().values().end(), bottom.data().values().begin()));
}

TEST(InnerProduct, ZeroWeightsGiveBias) {
  Blob bottom(Shape{3, 5}), weights(Shape{2, 5}), bias(Shape{2}), top(Shape{3, 2});
  bottom.data().fill(1.0f);
  bias.data()[0] = -1.5f;
  bias.data()[1] = 2.0f;
  ip_forward(bottom, weights, &bias, ip(2), top);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(top.data().at({i, 0}), -1.5f);
    EXPECT_EQ(top.data().at({i, 1}), 2.0f);
  }
}

TEST(InnerProduct, FlattensFourDimensionalBottom) {
  InnerProductLayer layer("ip", ip(3));
  Blob bottom(Shape{2, 3, 2, 2}), top;
  Blob* b[] = {&bottom};
  Blob* t[] = {&top};
  layer.reshape(b, t);
  EXPECT_EQ(top.shape(), (Shape{2, 3}));
  EXPECT_EQ(layer.params()[0].shape(), (Shape{3, 12}));
  EXPECT_EQ(layer.params()[1].shape(), (Shape{3}));
}

TEST(InnerProduct, ZeroTopGradient) {
  Rng rng(52);
  Blob bottom(Shape{3, 4}), weights(Shape{2, 4}), bias(Shape{2}), top(Shape{3, 2});
  fill_uniform(bottom.data().values(), rng);
  fill_uniform(weights.data().values(), rng);
  bottom.diff().fill(3.0f);
  ip_backward(top, bottom, weights, &bias, ip(2));
  for (float v : bottom.diff().values()) EXPECT_EQ(v, 0.0f);
  for (float v : weights.diff().values()) EXPECT_EQ(v, 0.0f);
  for (float v : bias.diff().values()) EXPECT_EQ(v, 0.0f);
}

TEST(InnerProduct, SingleRowWeightGradientIsOuterProduct) {
  Rng rng(53);
  Blob bottom(Shape{1, 4}), weights(Shape{3, 4}), bias(Shape{3}), top(Shape{1, 3});
  fill_uniform(bottom.data().values(), rng);
  fill_uniform(weights.data().values(), rng);
  fill_uniform(top.diff().values(), rng);
  ip_backward(top, bottom, weights, &bias, ip(3));
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t k = 0; k < 4; ++k) {
      EXPECT_EQ(weights.diff().at({n, k}), top.diff()[n] * bottom.data()[k]);
    }
    EXPECT_EQ(bias.diff()[n], top.diff()[n]);
  }
}

TEST(InnerProduct, GradientCheck) {
  Rng rng(54);
  InnerProductLayer layer("ip", ip(2));
  Blob bottom(Shape{3, 4}), top;
  std::vector<Blob*> b{&bottom}, t{&top};
  layer.reshape(b, t);
  layer.init_params(rng);
  fill_uniform(layer.params()[1].data().values(), rng);
  fill_uniform(bottom.data().values(), rng);
  const auto report = check_layer(layer, b, t, {0}, rng);
  EXPECT_TRUE(report.ok()) << report.first_failure;
}

TEST(InnerProduct, TransposedStorageGradientCheck) {
  Rng rng(55);
  InnerProductLayer layer("ip", ip(3, true, true));
  Blob bottom(Shape{2, 2, 2, 1}), top;
  std::vector<Blob*> b{&bottom}, t{&top};
  layer.reshape(b, t);
  EXPECT_EQ(layer.params()[0].shape(), (Shape{4, 3}));
  layer.init_params(rng);
  fill_uniform(bottom.data().values(), rng);
  const auto report = check_layer(layer, b, t, {0}, rng);
  EXPECT_TRUE(report.ok()) << report.first_failure;
}

TEST(InnerProduct, TransposedStorageMatchesPlain) {
  Rng rng(56);
  Blob bottom(Shape{3, 5}), plain(Shape{2, 5}), stored(Shape{5, 2}), bias(Shape{2});
  fill_uniform(bottom.data().values(), rng);
  fill_uniform(plain.data().values(), rng);
  fill_uniform(bias.data().values(), rng);
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t k = 0; k < 5; ++k) stored.data().at({k, n}) = plain.data().at({n, k});
  }
  Blob a(Shape{3, 2}), b(Shape{3, 2});
  ip_forward(bottom, plain, &bias, ip(2), a);
  ip_forward(bottom, stored, &bias, ip(2, true, true), b);
  EXPECT_TRUE(std::equal(a.data().values().begin(), a.data().values().end(), b.data().values().begin()));
}

TEST(InnerProduct, ShapeMismatchIsRejected) {
  Blob bottom(Shape{3, 4}), weights(Shape{2, 5}), top(Shape{3, 2});
  EXPECT_THROW(ip_forward(bottom, weights, nullptr, ip(2, false), top), ShapeError);
}

TEST(InnerProduct, SameResultUnderEveryPolicy) {
  Rng rng(57);
  Blob bottom(Shape{16, 40}), weights(Shape{24, 40}), bias(Shape{24}), top(Shape{16, 24});
  fill_uniform(bottom.data().values(), rng);
  fill_uniform(weights.data().values(), rng);
  fill_uniform(top.diff().values(), rng);
  ip_forward(bottom, weights, &bias, ip(24), top);
  ip_backward(top, bottom, weights, &bias, ip(24));
  const Tensor out = top.data(), grad = bottom.diff(), gw = weights.diff(), gb = bias.diff();
  for (unsigned threads : {2u, 7u}) {
    const ScopedPolicy scope(Policy::multithreaded(threads));
    weights.zero_diff();
    bias.zero_diff();
    ip_forward(bottom, weights, &bias, ip(24), top);
    ip_backward(top, bottom, weights, &bias, ip(24));
    EXPECT_TRUE(std::equal(out.values().begin(), out.values().end(), top.data().values().begin()));
    EXPECT_TRUE(std::equal(grad.values().begin(), grad.values().end(), bottom.diff().values().begin()));
    EXPECT_TRUE(std::equal(gw.values().begin(), gw.values().end(), weights.diff().values().begin()));
    EXPECT_TRUE(std::equal(gb.values().begin(), gb.values().end(), bias.diff().values().begin()));
  }
}

}  // namespace
}  // namespace portanet
