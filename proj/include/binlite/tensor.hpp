#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

#include "binlite/error.hpp"

namespace binlite {

// Dense row-major N-d array, rank 1..4, channels-last for images ([h,w,c],
// batched as [n,h,w,c]). Instantiated for float (the training/inference
// path) and double (gradient-check oracles only).
template <typename T>
class TensorT {
public:
  TensorT() = default;

  explicit TensorT(std::vector<int> shape) : shape_(std::move(shape)) {
    data_.assign(static_cast<std::size_t>(checked_numel(shape_)), T(0));
  }

  static TensorT full(std::vector<int> shape, T value) {
    TensorT t(std::move(shape));
    for (auto& x : t.data_) x = value;
    return t;
  }

  int rank() const { return static_cast<int>(shape_.size()); }
  int extent(int axis) const { return shape_[static_cast<std::size_t>(axis)]; }
  const std::vector<int>& shape() const { return shape_; }
  std::int64_t numel() const { return static_cast<std::int64_t>(data_.size()); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  std::vector<T>& vec() { return data_; }
  const std::vector<T>& vec() const { return data_; }

  T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
  T operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

  T& at(int i) { return data_[static_cast<std::size_t>(i)]; }
  T& at(int i, int j) {
    assert(rank() == 2);
    return data_[static_cast<std::size_t>(i) * shape_[1] + j];
  }
  T& at(int i, int j, int k) {
    assert(rank() == 3);
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  T& at(int i, int j, int k, int l) {
    assert(rank() == 4);
    return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }
  T at(int i) const { return data_[static_cast<std::size_t>(i)]; }
  T at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  T at(int i, int j, int k) const {
    return data_[(static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k];
  }
  T at(int i, int j, int k, int l) const {
    return data_[((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l];
  }

  bool same_shape(const TensorT& o) const { return shape_ == o.shape_; }

  // Reinterpret the buffer with a new shape of equal element count.
  TensorT reshaped(std::vector<int> new_shape) const {
    if (checked_numel(new_shape) != numel()) throw ShapeError("reshape: element count mismatch");
    TensorT t;
    t.shape_ = std::move(new_shape);
    t.data_ = data_;
    return t;
  }

  static std::int64_t checked_numel(const std::vector<int>& shape) {
    if (shape.empty() || shape.size() > 4)
      throw ShapeError("tensor rank must be between 1 and 4");
    std::int64_t n = 1;
    for (int e : shape) {
      if (e < 1) throw ShapeError("tensor extents must be >= 1");
      n *= e;
    }
    return n;
  }

private:
  std::vector<int> shape_;
  std::vector<T> data_;
};

using Tensor = TensorT<float>;
using DTensor = TensorT<double>;

enum class Padding : std::uint8_t { same = 0, valid = 1 };

struct ConvSpec {
  int kernel_h = 3;
  int kernel_w = 3;
  int stride = 1;
  Padding padding = Padding::same;
  int in_channels = 0;
  int out_channels = 0;
};

struct ConvGeometry {
  int out_h = 0, out_w = 0;
  int pad_top = 0, pad_left = 0;
};

// Output extents and symmetric padding (extra row/column on bottom/right
// when the total is odd). Throws ShapeError when an output extent would be < 1.
ConvGeometry conv_geometry(const ConvSpec& spec, int in_h, int in_w);

template <typename T>
TensorT<T> fill(std::vector<int> shape, T value) {
  return TensorT<T>::full(std::move(shape), value);
}

template <typename T>
TensorT<T> zeros_like(const TensorT<T>& t) {
  return TensorT<T>(t.shape());
}

// Rank-2 matrix product [m,k] x [k,n] -> [m,n]; deterministic summation order.
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b);

// Single-image cross-correlation: input [h,w,c_in], kernels [kh,kw,c_in,c_out],
// bias [c_out] (may be empty) -> [h',w',c_out].
template <typename T>
TensorT<T> conv2d(const TensorT<T>& input, const ConvSpec& spec, const TensorT<T>& kernels,
                  const TensorT<T>& bias);

// Per-channel convolution: input [h,w,c], kernels [kh,kw,c] -> [h',w',c].
template <typename T>
TensorT<T> depthwise_conv2d(const TensorT<T>& input, const ConvSpec& spec,
                            const TensorT<T>& kernels);

enum class PoolMode : std::uint8_t { max = 0, mean = 1 };

// Window pooling over [h,w,c]; channels independent, no padding.
template <typename T>
TensorT<T> pool2d(const TensorT<T>& input, int window, int stride, PoolMode mode);

} // namespace binlite
