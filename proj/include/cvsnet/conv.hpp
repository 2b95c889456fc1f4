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

#ifndef CVSNET_CONV_HPP_
#define CVSNET_CONV_HPP_

#include <string>

#include "cvsnet/autograd.hpp"
#include "cvsnet/params.hpp"

namespace cvsnet {

/// Geometry of a 2-D convolution. Padding is per axis so 1×n kernels can keep
/// the spatial size; groups == in_channels gives a depthwise convolution.
struct ConvSpec {
  Index in_channels = 1;
  Index out_channels = 1;
  Index kernel_h = 1;
  Index kernel_w = 1;
  Index stride = 1;
  Index pad_h = 0;
  Index pad_w = 0;
  Index groups = 1;
  bool has_bias = false;

  /// Odd kernel with "same" padding, so stride 1 preserves size.
  static ConvSpec same(Index in, Index out, Index kh, Index kw, Index stride = 1,
                       Index groups = 1, bool bias = false) {
    return ConvSpec{in, out, kh, kw, stride, (kh - 1) / 2, (kw - 1) / 2, groups, bias};
  }

  void validate() const;
  Index out_h(Index h) const { return (h + 2 * pad_h - kernel_h) / stride + 1; }
  Index out_w(Index w) const { return (w + 2 * pad_w - kernel_w) / stride + 1; }
  /// Output shape for `in`; throws if the result would be empty.
  Shape output_shape(const Shape& in) const;
  Shape weight_shape() const { return Shape{out_channels, in_channels / groups, kernel_h, kernel_w}; }
  Index fan_in() const { return (in_channels / groups) * kernel_h * kernel_w; }
  Index param_count() const {
    return weight_shape().numel() + (has_bias ? out_channels : 0);
  }

  friend bool operator==(const ConvSpec&, const ConvSpec&) = default;
};

/// Direct cross-correlation (no kernel flip), computed per sample and group as
/// a patch-matrix product. bias may be undefined.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias,
                   const ConvSpec& spec);

/// Convolution layer owning its weights.
template <typename Scalar>
struct Conv2d {
  ConvSpec spec;
  Var<Scalar> weight;
  Var<Scalar> bias;

  Conv2d() = default;
  Conv2d(const ConvSpec& s, Rng& rng) : spec(s) {
    spec.validate();
    weight = kaiming_normal<Scalar>(spec.weight_shape(), spec.fan_in(), rng);
    if (spec.has_bias) bias = constant_parameter<Scalar>(Shape{1, 1, 1, spec.out_channels}, 0);
  }

  Var<Scalar> operator()(const Var<Scalar>& x) const { return conv2d(x, weight, bias, spec); }

  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const {
    params.add(prefix + ".weight", weight);
    if (bias.defined()) params.add(prefix + ".bias", bias);
  }
};

}  // namespace cvsnet

#endif  // CVSNET_CONV_HPP_
