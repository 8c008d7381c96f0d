#include <gtest/gtest.h>

#include <numeric>

#include "portanet/blob.hpp"
#include "portanet/error.hpp"
#include "portanet/random.hpp"

namespace portanet {
namespace {

TEST(Blob, NewIsZeroed) {
  const Blob b = blob_new(Shape{1, 1, 2, 2});
  EXPECT_EQ(b.count(), 4u);
  for (float v : b.data().values()) EXPECT_EQ(v, 0.0f);
  for (float v : b.diff().values()) EXPECT_EQ(v, 0.0f);
  EXPECT_EQ(b.data().shape(), b.diff().shape());
  EXPECT_NE(b.data().data(), b.diff().data());
}

TEST(Blob, Counts) {
  EXPECT_EQ(blob_new(Shape{64, 1, 28, 28}).count(), 50176u);
  const Blob ip = blob_new(Shape{2, 3});
  EXPECT_EQ(ip.shape().rank(), 2u);
  EXPECT_EQ(ip.count(), 6u);
  EXPECT_THROW(blob_new(Shape{0, 3}), ShapeError);
}

TEST(Blob, DataViewAliases) {
  Blob b(Shape{6});
  std::iota(b.data().values().begin(), b.data().values().end(), 0.0f);
  {
    MatrixHandle m = b.data_as_matrix(2, 3);
    EXPECT_FALSE(m.owns_copy());
    EXPECT_EQ(m(1, 0), 3.0f);
    m(0, 2) = 20.0f;
  }
  EXPECT_EQ(b.data()[2], 20.0f);
  EXPECT_THROW(b.data_as_matrix(4, 2), ShapeError);
}

TEST(Blob, TransposedViewIsTranspose) {
  Blob b(Shape{6});
  std::iota(b.data().values().begin(), b.data().values().end(), 0.0f);
  const ConstMatrixView plain = b.data_matrix(2, 3);
  MatrixHandle t = b.data_as_matrix(3, 2, /*transposed=*/true);
  ASSERT_EQ(t.rows(), 3u);
  ASSERT_EQ(t.cols(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(t(j, i), plain(i, j));
  }
}

TEST(Blob, IpWeightsViewedTransposed) {
  // [N, K] weights read as K×N, the orientation the forward product uses.
  Blob w(Shape{4, 3});
  std::iota(w.data().values().begin(), w.data().values().end(), 1.0f);
  MatrixHandle kn = w.data_as_matrix(3, 4, true);
  for (std::size_t n = 0; n < 4; ++n) {
    for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(kn(k, n), w.data().at({n, k}));
  }
}

TEST(Blob, TransposedWritesAreWrittenBack) {
  Blob b(Shape{2, 3});
  {
    MatrixHandle t = b.diff_as_matrix(3, 2, true);
    t(2, 1) = 5.0f;  // element (1, 2) of the stored 2×3 matrix
  }
  EXPECT_EQ(b.diff().at({1, 2}), 5.0f);
  EXPECT_THROW(b.diff_as_matrix(5, 2, true), ShapeError);
}

TEST(Blob, DiffViewOfFreshBlobIsZero) {
  Blob b(Shape{3, 4});
  MatrixHandle d = b.diff_as_matrix(3, 4);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(d(i, j), 0.0f);
  }
  d(2, 3) = 1.5f;
  EXPECT_EQ(b.diff()[11], 1.5f);
}

TEST(Blob, Update) {
  Blob b(Shape{2});
  b.data().fill(1.0f);
  blob_update(b);
  EXPECT_EQ(b.data()[0], 1.0f);
  b.diff()[0] = 0.5f;
  b.diff()[1] = -0.5f;
  blob_update(b);
  EXPECT_EQ(b.data()[0], 0.5f);
  EXPECT_EQ(b.data()[1], 1.5f);
  EXPECT_EQ(b.diff()[0], 0.5f);

  Rng rng(9);
  Blob r(Shape{3, 5});
  for (float& v : r.data().values()) v = rng.uniform(-1, 1);
  for (float& v : r.diff().values()) v = rng.uniform(-1, 1);
  const Tensor data = r.data(), diff = r.diff();
  r.update();
  for (std::size_t i = 0; i < r.count(); ++i) EXPECT_EQ(r.data()[i], data[i] - diff[i]);
}

TEST(Blob, ReshapeReallocatesOnlyOnChange) {
  Blob b(Shape{2, 3});
  b.data().fill(4.0f);
  b.reshape(Shape{2, 3});
  EXPECT_EQ(b.data()[0], 4.0f);
  b.reshape(Shape{3, 3});
  EXPECT_EQ(b.count(), 9u);
  EXPECT_EQ(b.diff().count(), 9u);
}

}  // namespace
}  // namespace portanet
