#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "portanet/error.hpp"

#if defined(PORTANET_BOUNDS_CHECKS) || !defined(NDEBUG)
#define PORTANET_CHECK_INDEX(cond, msg) \
  do {                                  \
    if (!(cond)) throw ::portanet::ShapeError(msg); \
  } while (0)
#else
#define PORTANET_CHECK_INDEX(cond, msg) \
  do {                                  \
  } while (0)
#endif

namespace portanet {

/// Extents of a dense row-major array, rank 1 to 4.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims);
  explicit Shape(std::span<const std::size_t> dims);

  /// Validates signed extents, as they arrive from config files.
  static Shape from_signed(std::span<const std::int64_t> dims);

  std::size_t rank() const noexcept { return rank_; }
  std::size_t operator[](std::size_t axis) const;
  std::size_t count() const noexcept { return count_; }
  std::span<const std::size_t> dims() const noexcept { return {dims_.data(), rank_}; }

  /// Row-major stride of `axis`; the last axis has stride 1.
  std::size_t stride(std::size_t axis) const;

  std::string str() const;

  friend bool operator==(const Shape& a, const Shape& b) {
    return a.dims().size() == b.dims().size() &&
           std::equal(a.dims().begin(), a.dims().end(), b.dims().begin());
  }

 private:
  void init(std::span<const std::size_t> dims);

  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
  std::size_t count_ = 0;
};

template <typename T>
class BasicMatrixView;

/// Writable 2-D window onto contiguous row-major storage.
using MatrixView = BasicMatrixView<float>;
/// Read-only 2-D window.
using ConstMatrixView = BasicMatrixView<const float>;

/// Dense single-precision array with row-major layout.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(const Shape& shape, float fill = 0.0f);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t count() const noexcept { return values_.size(); }

  std::span<float> values() noexcept { return values_; }
  std::span<const float> values() const noexcept { return values_; }
  float* data() noexcept { return values_.data(); }
  const float* data() const noexcept { return values_.data(); }

  float& operator[](std::size_t i) {
    PORTANET_CHECK_INDEX(i < values_.size(), "tensor flat index out of range");
    return values_[i];
  }
  float operator[](std::size_t i) const {
    PORTANET_CHECK_INDEX(i < values_.size(), "tensor flat index out of range");
    return values_[i];
  }

  /// Row-major flat offset of a full coordinate.
  std::size_t offset(std::initializer_list<std::size_t> coord) const;

  float& at(std::initializer_list<std::size_t> coord) { return values_[offset(coord)]; }
  float at(std::initializer_list<std::size_t> coord) const { return values_[offset(coord)]; }

  /// Changes the shape in place; the element order is untouched.
  void reshape(const Shape& shape);

  void fill(float value);

 private:
  Shape shape_;
  std::vector<float> values_;
};

Tensor new_tensor(const Shape& shape, float fill);

/// Copy of `t` with a new shape of equal element count.
Tensor reshape(const Tensor& t, const Shape& shape);

template <typename T>
class BasicMatrixView {
 public:
  using value_type = std::remove_const_t<T>;

  BasicMatrixView() = default;
  BasicMatrixView(T* data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {}

  template <typename U>
    requires(std::is_const_v<T> && std::is_same_v<const U, T>)
  BasicMatrixView(const BasicMatrixView<U>& other)  // NOLINT: implicit widening to const
      : data_(other.data()), rows_(other.rows()), cols_(other.cols()) {}

  T* data() const noexcept { return data_; }
  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t count() const noexcept { return rows_ * cols_; }
  std::span<T> values() const noexcept { return {data_, rows_ * cols_}; }

  T& operator()(std::size_t i, std::size_t j) const {
    PORTANET_CHECK_INDEX(i < rows_ && j < cols_, "matrix view index out of range");
    return data_[i * cols_ + j];
  }

  std::span<T> row(std::size_t i) const {
    PORTANET_CHECK_INDEX(i < rows_, "matrix view row out of range");
    return {data_ + i * cols_, cols_};
  }

 private:
  T* data_ = nullptr;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// Views `t` as rows×cols. Writes through the view land in `t`.
MatrixView as_matrix(Tensor& t, std::size_t rows, std::size_t cols);
ConstMatrixView as_matrix(const Tensor& t, std::size_t rows, std::size_t cols);

/// Views raw storage, checking the element count against `rows·cols`.
MatrixView as_matrix(std::span<float> values, std::size_t rows, std::size_t cols);
ConstMatrixView as_matrix(std::span<const float> values, std::size_t rows, std::size_t cols);

/// out[j,i] = m[i,j], returned as a [cols, rows] tensor.
Tensor transpose(ConstMatrixView m);

/// Transposes into caller-owned storage of shape cols×rows.
void transpose_into(ConstMatrixView m, MatrixView out);

}  // namespace portanet
