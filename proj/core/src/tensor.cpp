#include "portanet/tensor.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

#include "portanet/engine.hpp"

namespace portanet {

Shape::Shape(std::initializer_list<std::size_t> dims) {
  init(std::span<const std::size_t>(dims.begin(), dims.size()));
}

Shape::Shape(std::span<const std::size_t> dims) { init(dims); }

Shape Shape::from_signed(std::span<const std::int64_t> dims) {
  std::vector<std::size_t> unsigned_dims;
  unsigned_dims.reserve(dims.size());
  for (std::int64_t d : dims) {
    if (d <= 0) throw ShapeError("invalid shape: extent " + std::to_string(d) + " is not positive");
    unsigned_dims.push_back(static_cast<std::size_t>(d));
  }
  return Shape(std::span<const std::size_t>(unsigned_dims));
}

void Shape::init(std::span<const std::size_t> dims) {
  if (dims.empty() || dims.size() > kMaxRank) {
    throw ShapeError("invalid shape: rank " + std::to_string(dims.size()) + " not in [1, 4]");
  }
  std::size_t count = 1;
  for (std::size_t d : dims) {
    if (d == 0) throw ShapeError("invalid shape: zero extent");
    if (count > std::numeric_limits<std::size_t>::max() / d / sizeof(float)) {
      throw ShapeError("invalid shape: element count overflows");
    }
    count *= d;
  }
  std::copy(dims.begin(), dims.end(), dims_.begin());
  rank_ = dims.size();
  count_ = count;
}

std::size_t Shape::operator[](std::size_t axis) const {
  if (axis >= rank_) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + str());
  return dims_[axis];
}

std::size_t Shape::stride(std::size_t axis) const {
  if (axis >= rank_) throw ShapeError("axis " + std::to_string(axis) + " out of range for " + str());
  std::size_t s = 1;
  for (std::size_t a = axis + 1; a < rank_; ++a) s *= dims_[a];
  return s;
}

std::string Shape::str() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t a = 0; a < rank_; ++a) os << (a ? "," : "") << dims_[a];
  os << ']';
  return os.str();
}

Tensor::Tensor(const Shape& shape, float fill) : shape_(shape), values_(shape.count(), fill) {
  if (shape.rank() == 0) throw ShapeError("invalid shape: empty");
}

std::size_t Tensor::offset(std::initializer_list<std::size_t> coord) const {
  if (coord.size() != shape_.rank()) {
    throw ShapeError("coordinate rank " + std::to_string(coord.size()) + " does not match " + shape_.str());
  }
  std::size_t flat = 0;
  std::size_t axis = 0;
  for (std::size_t c : coord) {
    if (c >= shape_[axis]) throw ShapeError("coordinate out of range for " + shape_.str());
    flat = flat * shape_[axis] + c;
    ++axis;
  }
  return flat;
}

void Tensor::reshape(const Shape& shape) {
  if (shape.count() != values_.size()) {
    throw ShapeError("cannot reshape " + shape_.str() + " to " + shape.str());
  }
  shape_ = shape;
}

void Tensor::fill(float value) { std::fill(values_.begin(), values_.end(), value); }

Tensor new_tensor(const Shape& shape, float fill) { return Tensor(shape, fill); }

Tensor reshape(const Tensor& t, const Shape& shape) {
  Tensor out = t;
  out.reshape(shape);
  return out;
}

namespace {

void check_matrix_count(std::size_t count, std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0 || rows * cols != count) {
    throw ShapeError("cannot view " + std::to_string(count) + " elements as " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  }
}

}  // namespace

MatrixView as_matrix(Tensor& t, std::size_t rows, std::size_t cols) {
  return as_matrix(t.values(), rows, cols);
}

ConstMatrixView as_matrix(const Tensor& t, std::size_t rows, std::size_t cols) {
  return as_matrix(t.values(), rows, cols);
}

MatrixView as_matrix(std::span<float> values, std::size_t rows, std::size_t cols) {
  check_matrix_count(values.size(), rows, cols);
  return {values.data(), rows, cols};
}

ConstMatrixView as_matrix(std::span<const float> values, std::size_t rows, std::size_t cols) {
  check_matrix_count(values.size(), rows, cols);
  return {values.data(), rows, cols};
}

Tensor transpose(ConstMatrixView m) {
  Tensor out(Shape{m.cols(), m.rows()});
  transpose_into(m, as_matrix(out, m.cols(), m.rows()));
  return out;
}

void transpose_into(ConstMatrixView m, MatrixView out) {
  if (out.rows() != m.cols() || out.cols() != m.rows()) {
    throw ShapeError("transpose target must be " + std::to_string(m.cols()) + "x" + std::to_string(m.rows()));
  }
  check_disjoint(out.values(), m.values(), "transpose");
  const std::size_t rows = m.rows();
  const std::size_t cols = m.cols();
  const float* src = m.data();
  float* dst = out.data();
  for_each_index(cols, [=](std::size_t j) {
    float* out_row = dst + j * rows;
    for (std::size_t i = 0; i < rows; ++i) out_row[i] = src[i * cols + j];
  });
}

}  // namespace portanet
