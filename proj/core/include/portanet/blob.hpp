#pragma once

#include <optional>

#include "portanet/tensor.hpp"

namespace portanet {

/// A rows×cols matrix handed out by a Blob.
///
/// Untransposed handles alias the blob storage directly. Transposed handles
/// own a materialized copy; if the handle was obtained through a mutable blob
/// the copy is transposed back into the blob when the handle is destroyed, so
/// writes are never lost.
class MatrixHandle {
 public:
  MatrixHandle(MatrixView direct) : view_(direct) {}  // NOLINT
  MatrixHandle(Tensor transposed, MatrixView write_back);
  MatrixHandle(MatrixHandle&& other) noexcept;
  MatrixHandle& operator=(MatrixHandle&&) = delete;
  MatrixHandle(const MatrixHandle&) = delete;
  MatrixHandle& operator=(const MatrixHandle&) = delete;
  ~MatrixHandle();

  MatrixView view() const noexcept { return view_; }
  operator MatrixView() const noexcept { return view_; }        // NOLINT
  operator ConstMatrixView() const noexcept { return view_; }   // NOLINT
  std::size_t rows() const noexcept { return view_.rows(); }
  std::size_t cols() const noexcept { return view_.cols(); }
  float& operator()(std::size_t i, std::size_t j) const { return view_(i, j); }

  bool owns_copy() const noexcept { return copy_.has_value(); }

 private:
  std::optional<Tensor> copy_;
  MatrixView write_back_;
  MatrixView view_;
};

/// Storage block pairing a data tensor with its same-shaped gradient.
class Blob {
 public:
  Blob() = default;
  explicit Blob(const Shape& shape);

  const Shape& shape() const noexcept { return data_.shape(); }
  std::size_t count() const noexcept { return data_.count(); }
  std::size_t dim(std::size_t axis) const { return shape()[axis]; }

  Tensor& data() noexcept { return data_; }
  const Tensor& data() const noexcept { return data_; }
  Tensor& diff() noexcept { return diff_; }
  const Tensor& diff() const noexcept { return diff_; }

  /// Re-allocates both tensors if the shape changes; contents are zeroed then.
  void reshape(const Shape& shape);

  /// Views data as rows×cols. With `transposed`, the storage is read as
  /// cols×rows and a transposed copy is returned (written back on release).
  MatrixHandle data_as_matrix(std::size_t rows, std::size_t cols, bool transposed = false);
  MatrixHandle diff_as_matrix(std::size_t rows, std::size_t cols, bool transposed = false);
  ConstMatrixView data_matrix(std::size_t rows, std::size_t cols) const { return as_matrix(data_, rows, cols); }
  ConstMatrixView diff_matrix(std::size_t rows, std::size_t cols) const { return as_matrix(diff_, rows, cols); }

  /// data -= diff.
  void update();

  void zero_diff() { diff_.fill(0.0f); }

 private:
  Tensor data_;
  Tensor diff_;
};

Blob blob_new(const Shape& shape);
void blob_update(Blob& b);

}  // namespace portanet
