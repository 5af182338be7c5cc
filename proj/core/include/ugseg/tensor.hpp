#pragma once

#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "ugseg/errors.hpp"

namespace ugseg {

using Shape = std::vector<std::int64_t>;

inline std::int64_t numel_of(const Shape& shape) {
  std::int64_t n = 1;
  for (auto e : shape) {
    if (e < 0) throw ShapeError("tensor extents must be non-negative");
    n *= e;
  }
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

/// Dense row-major n-dimensional array. Rank 0 (empty shape) is a scalar
/// with one element. Batched images use NxCxHxW.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel_of(shape) != static_cast<std::int64_t>(data.size())) {
      throw ShapeError("tensor data length does not match shape " + shape_str(shape));
    }
  }

  static Tensor zeros(Shape s) {
    auto n = numel_of(s);
    return Tensor(std::move(s), std::vector<T>(static_cast<std::size_t>(n), T(0)));
  }
  static Tensor full(Shape s, T v) {
    auto n = numel_of(s);
    return Tensor(std::move(s), std::vector<T>(static_cast<std::size_t>(n), v));
  }
  static Tensor scalar(T v) { return Tensor({}, std::vector<T>{v}); }

  std::int64_t numel() const { return static_cast<std::int64_t>(data.size()); }
  std::int64_t rank() const { return static_cast<std::int64_t>(shape.size()); }
  bool is_scalar() const { return shape.empty(); }

  std::int64_t extent(std::size_t axis) const { return shape.at(axis); }

  T& operator[](std::int64_t i) { return data[static_cast<std::size_t>(i)]; }
  const T& operator[](std::int64_t i) const { return data[static_cast<std::size_t>(i)]; }

  /// Flat index for an NCHW tensor.
  std::int64_t at4(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return ((n * shape[1] + c) * shape[2] + h) * shape[3] + w;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) out[i] = static_cast<U>(data[i]);
    return Tensor<U>(shape, std::move(out));
  }
};

inline bool same_shape(const Shape& a, const Shape& b) { return a == b; }

template <typename T>
void require_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* what) {
  if (!same_shape(a.shape, b.shape)) {
    throw ShapeError(std::string(what) + ": shape mismatch " + shape_str(a.shape) +
                     " vs " + shape_str(b.shape));
  }
}

}  // namespace ugseg
