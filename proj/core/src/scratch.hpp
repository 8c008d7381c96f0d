#pragma once

#include <string>

#include "portanet/blob.hpp"
#include "portanet/error.hpp"
#include "portanet/tensor.hpp"

namespace portanet::detail {

// Reallocates `t` only when its shape differs from `shape`.
inline Tensor& ensure_shape(Tensor& t, const Shape& shape) {
  if (t.count() == 0 || !(t.shape() == shape)) t = Tensor(shape);
  return t;
}

inline void expect_shape(const Shape& actual, const Shape& expected, const char* what) {
  if (!(actual == expected)) {
    throw ShapeError(std::string(what) + ": expected " + expected.str() + ", got " + actual.str());
  }
}

inline void expect_rank(const Shape& actual, std::size_t rank, const char* what) {
  if (actual.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " + actual.str());
  }
}

}  // namespace portanet::detail
