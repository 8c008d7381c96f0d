#include "portanet/linalg.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "portanet/engine.hpp"
#include "portanet/error.hpp"

namespace portanet {

namespace {

constexpr std::size_t kRowTile = 6;
constexpr std::size_t kColTile = 16;

std::string dims(std::size_t r, std::size_t c) { return std::to_string(r) + "x" + std::to_string(c); }

using Lane = float __attribute__((vector_size(32)));
constexpr std::size_t kLaneWidth = sizeof(Lane) / sizeof(float);
constexpr std::size_t kLanes = kColTile / kLaneWidth;

inline Lane load_lane(const float* p) {
  Lane v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

inline void store_lane(float* p, Lane v) { std::memcpy(p, &v, sizeof v); }

// Full register tile. Each accumulator lane sees k in ascending order, so the
// result matches the naive triple loop bit for bit.
inline void tile_full(const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c, std::size_t ldc,
                      std::size_t depth, bool accumulate) {
  Lane acc[kRowTile][kLanes];
  for (std::size_t r = 0; r < kRowTile; ++r) {
    for (std::size_t l = 0; l < kLanes; ++l) acc[r][l] = accumulate ? load_lane(c + r * ldc + l * kLaneWidth) : Lane{};
  }
  for (std::size_t k = 0; k < depth; ++k) {
    Lane bv[kLanes];
    for (std::size_t l = 0; l < kLanes; ++l) bv[l] = load_lane(b + k * ldb + l * kLaneWidth);
    for (std::size_t r = 0; r < kRowTile; ++r) {
      const float av = a[r * lda + k];
      for (std::size_t l = 0; l < kLanes; ++l) acc[r][l] += av * bv[l];
    }
  }
  for (std::size_t r = 0; r < kRowTile; ++r) {
    for (std::size_t l = 0; l < kLanes; ++l) store_lane(c + r * ldc + l * kLaneWidth, acc[r][l]);
  }
}

// Ragged edge tile, same summation order as tile_full.
inline void tile_edge(const float* a, std::size_t lda, const float* b, std::size_t ldb, float* c, std::size_t ldc,
                      std::size_t depth, std::size_t rows, std::size_t cols, bool accumulate) {
  float acc[kRowTile][kColTile];
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) acc[r][j] = accumulate ? c[r * ldc + j] : 0.0f;
  }
  for (std::size_t k = 0; k < depth; ++k) {
    const float* brow = b + k * ldb;
    for (std::size_t r = 0; r < rows; ++r) {
      const float av = a[r * lda + k];
      for (std::size_t j = 0; j < cols; ++j) acc[r][j] += av * brow[j];
    }
  }
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < cols; ++j) c[r * ldc + j] = acc[r][j];
  }
}

}  // namespace

void gemm(ConstMatrixView a, ConstMatrixView b, MatrixView c, bool accumulate) {
  if (a.cols() != b.rows() || c.rows() != a.rows() || c.cols() != b.cols()) {
    throw ShapeError("gemm: " + dims(a.rows(), a.cols()) + " * " + dims(b.rows(), b.cols()) + " -> " +
                     dims(c.rows(), c.cols()));
  }
  check_disjoint(c.values(), a.values(), "gemm");
  check_disjoint(c.values(), b.values(), "gemm");

  const std::size_t m = a.rows();
  const std::size_t k = a.cols();
  const std::size_t n = b.cols();
  const float* pa = a.data();
  const float* pb = b.data();
  float* pc = c.data();
  const std::size_t row_tiles = (m + kRowTile - 1) / kRowTile;

  for_each_index(row_tiles, [=](std::size_t t) {
    const std::size_t i0 = t * kRowTile;
    const std::size_t rows = std::min(kRowTile, m - i0);
    const float* arow = pa + i0 * k;
    float* crow = pc + i0 * n;
    for (std::size_t j0 = 0; j0 < n; j0 += kColTile) {
      const std::size_t cols = std::min(kColTile, n - j0);
      if (rows == kRowTile && cols == kColTile) {
        tile_full(arow, k, pb + j0, n, crow + j0, n, k, accumulate);
      } else {
        tile_edge(arow, k, pb + j0, n, crow + j0, n, k, rows, cols, accumulate);
      }
    }
  });
}

void add_vector_to_rows(MatrixView c, std::span<const float> v) {
  if (v.size() != c.cols()) {
    throw ShapeError("add_vector_to_rows: vector of " + std::to_string(v.size()) + " for " + dims(c.rows(), c.cols()));
  }
  check_disjoint(c.values(), v, "add_vector_to_rows");
  const float* pv = v.data();
  for_each_row(c, [=](std::size_t, std::span<float> row) {
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += pv[j];
  });
}

void axpby(float alpha, std::span<const float> x, float beta, std::span<float> y) {
  if (x.size() != y.size()) {
    throw ShapeError("axpby: sizes " + std::to_string(x.size()) + " and " + std::to_string(y.size()));
  }
  if (x.data() != y.data()) check_disjoint(y, x, "axpby");
  const float* px = x.data();
  float* py = y.data();
  for_each_block(x.size(), [=](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) py[i] = alpha * px[i] + beta * py[i];
  });
}

void axpby(float alpha, const Tensor& x, float beta, Tensor& y) {
  if (!(x.shape() == y.shape())) throw ShapeError("axpby: " + x.shape().str() + " vs " + y.shape().str());
  axpby(alpha, x.values(), beta, y.values());
}

void row_sums(ConstMatrixView m, std::span<float> out, bool accumulate) {
  if (out.size() != m.rows()) throw ShapeError("row_sums: output length mismatch");
  check_disjoint(out, m.values(), "row_sums");
  float* po = out.data();
  for_each_row(m, [=](std::size_t i, std::span<const float> row) {
    float sum = 0.0f;
    for (float v : row) sum += v;
    po[i] = accumulate ? po[i] + sum : sum;
  });
}

}  // namespace portanet
