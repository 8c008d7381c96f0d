#include "portanet/blob.hpp"

#include "portanet/engine.hpp"

namespace portanet {

MatrixHandle::MatrixHandle(Tensor transposed, MatrixView write_back)
    : copy_(std::move(transposed)), write_back_(write_back) {
  view_ = as_matrix(*copy_, write_back.cols(), write_back.rows());
}

MatrixHandle::MatrixHandle(MatrixHandle&& other) noexcept
    : copy_(std::move(other.copy_)), write_back_(other.write_back_), view_(other.view_) {
  if (copy_) view_ = MatrixView(copy_->data(), view_.rows(), view_.cols());
  other.copy_.reset();
  other.write_back_ = {};
}

MatrixHandle::~MatrixHandle() {
  if (copy_ && write_back_.data() != nullptr) {
    transpose_into(view_, write_back_);
  }
}

Blob::Blob(const Shape& shape) : data_(shape, 0.0f), diff_(shape, 0.0f) {}

void Blob::reshape(const Shape& shape) {
  if (data_.count() != 0 && shape == data_.shape()) return;
  data_ = Tensor(shape, 0.0f);
  diff_ = Tensor(shape, 0.0f);
}

namespace {

MatrixHandle matrix_of(Tensor& t, std::size_t rows, std::size_t cols, bool transposed) {
  if (!transposed) return MatrixHandle(as_matrix(t, rows, cols));
  MatrixView stored = as_matrix(t, cols, rows);
  return MatrixHandle(transpose(stored), stored);
}

}  // namespace

MatrixHandle Blob::data_as_matrix(std::size_t rows, std::size_t cols, bool transposed) {
  return matrix_of(data_, rows, cols, transposed);
}

MatrixHandle Blob::diff_as_matrix(std::size_t rows, std::size_t cols, bool transposed) {
  return matrix_of(diff_, rows, cols, transposed);
}

void Blob::update() {
  float* data = data_.data();
  const float* diff = diff_.data();
  for_each_block(data_.count(), [=](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) data[i] -= diff[i];
  });
}

Blob blob_new(const Shape& shape) { return Blob(shape); }

void blob_update(Blob& b) { b.update(); }

}  // namespace portanet
