/* Copyright 2026 The CVSNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef CVSNET_TENSOR_HPP_
#define CVSNET_TENSOR_HPP_

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <ostream>
#include <string>
#include <type_traits>

#include "cvsnet/error.hpp"

namespace cvsnet {

using Index = Eigen::Index;

/// Dimensions of a (batch, channels, height, width) array.
struct Shape {
  Index n = 0;
  Index c = 0;
  Index h = 0;
  Index w = 0;

  constexpr Index numel() const { return n * c * h * w; }
  constexpr Index plane() const { return h * w; }
  constexpr Index sample() const { return c * h * w; }

  friend constexpr bool operator==(const Shape&, const Shape&) = default;

  std::string str() const {
    return detail::concat("(", n, ", ", c, ", ", h, ", ", w, ")");
  }
};

inline std::ostream& operator<<(std::ostream& os, const Shape& s) { return os << s.str(); }

/// Dense row-major NCHW array. Storage is an Eigen column array so whole-tensor
/// arithmetic can be written as Eigen expressions on `array()`.
template <typename Scalar>
class Tensor {
  static_assert(std::is_floating_point_v<Scalar>, "non floating-point scalar type");

 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using PlaneMap = Eigen::Map<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
  using ConstPlaneMap =
      Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

  Tensor() = default;

  explicit Tensor(const Shape& shape) : shape_(shape), data_(Array::Zero(checked_numel(shape))) {}

  Tensor(const Shape& shape, Array data) : shape_(shape), data_(std::move(data)) {
    CVSNET_CHECK(data_.size() == shape_.numel(), ShapeError, "tensor data length ", data_.size(),
                 " does not match shape ", shape_);
  }

  static Tensor zeros(const Shape& shape) { return Tensor(shape); }

  static Tensor constant(const Shape& shape, Scalar value) {
    return Tensor(shape, Array::Constant(checked_numel(shape), value));
  }

  const Shape& shape() const { return shape_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Index offset(Index n, Index c, Index h, Index w) const {
    return ((n * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }
  Scalar& operator()(Index n, Index c, Index h, Index w) { return data_[offset(n, c, h, w)]; }
  Scalar operator()(Index n, Index c, Index h, Index w) const { return data_[offset(n, c, h, w)]; }

  Scalar* plane_data(Index n, Index c) { return data_.data() + offset(n, c, 0, 0); }
  const Scalar* plane_data(Index n, Index c) const { return data_.data() + offset(n, c, 0, 0); }

  PlaneMap plane(Index n, Index c) { return PlaneMap(plane_data(n, c), shape_.h, shape_.w); }
  ConstPlaneMap plane(Index n, Index c) const {
    return ConstPlaneMap(plane_data(n, c), shape_.h, shape_.w);
  }

  /// Same data, new dimensions with equal element count.
  Tensor reshaped(const Shape& shape) const {
    CVSNET_CHECK(shape.numel() == shape_.numel(), ShapeError, "cannot reshape ", shape_, " to ",
                 shape);
    return Tensor(shape, data_);
  }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

  bool all_finite() const { return data_.isFinite().all(); }

  void set_zero() { data_.setZero(); }

 private:
  static Index checked_numel(const Shape& s) {
    CVSNET_CHECK(s.n >= 0 && s.c >= 0 && s.h >= 0 && s.w >= 0, ShapeError,
                 "negative tensor dimension in ", s);
    return s.numel();
  }

  Shape shape_;
  Array data_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

}  // namespace cvsnet

#endif  // CVSNET_TENSOR_HPP_
