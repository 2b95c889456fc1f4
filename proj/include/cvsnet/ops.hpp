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

// Differentiable tensor operations. Every function records its backward rule
// when grad mode is on and an input requires a gradient.

#ifndef CVSNET_OPS_HPP_
#define CVSNET_OPS_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "cvsnet/autograd.hpp"

namespace cvsnet {

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);
template <typename Scalar>
Var<Scalar> sub(const Var<Scalar>& a, const Var<Scalar>& b);
template <typename Scalar>
Var<Scalar> mul(const Var<Scalar>& a, const Var<Scalar>& b);
template <typename Scalar>
Var<Scalar> scale(const Var<Scalar>& a, Scalar factor);

template <typename Scalar>
Var<Scalar> operator+(const Var<Scalar>& a, const Var<Scalar>& b) { return add(a, b); }
template <typename Scalar>
Var<Scalar> operator-(const Var<Scalar>& a, const Var<Scalar>& b) { return sub(a, b); }
template <typename Scalar>
Var<Scalar> operator*(const Var<Scalar>& a, Scalar s) { return scale(a, s); }
template <typename Scalar>
Var<Scalar> operator*(Scalar s, const Var<Scalar>& a) { return scale(a, s); }

/// Reductions to a (1, 1, 1, 1) scalar.
template <typename Scalar>
Var<Scalar> sum(const Var<Scalar>& a);
template <typename Scalar>
Var<Scalar> mean(const Var<Scalar>& a);
/// sum(weights ⊙ a) with a constant weight tensor.
template <typename Scalar>
Var<Scalar> weighted_sum(const Var<Scalar>& a, const Tensor<Scalar>& weights);

/// gain · max(0, x). The subgradient at x = 0 is 0.
template <typename Scalar>
Var<Scalar> scaled_relu(const Var<Scalar>& x, Scalar gain);
/// Per-channel gains; `gains.size()` must equal the channel count.
template <typename Scalar>
Var<Scalar> scaled_relu(const Var<Scalar>& x, std::span<const Scalar> gains);
template <typename Scalar>
Var<Scalar> relu(const Var<Scalar>& x) { return scaled_relu(x, Scalar(1)); }

/// Multiplies channel c by gains[c].
template <typename Scalar>
Var<Scalar> scale_channels(const Var<Scalar>& x, std::span<const Scalar> gains);

/// Exact (erf) GELU.
template <typename Scalar>
Var<Scalar> gelu(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> tanh(const Var<Scalar>& x);

/// Views channels as (groups, c / groups), transposes, flattens.
template <typename Scalar>
Var<Scalar> channel_shuffle(const Var<Scalar>& x, Index groups);
std::vector<Index> channel_shuffle_permutation(Index channels, Index groups);

/// Gathers channels by index; indices may repeat.
template <typename Scalar>
Var<Scalar> select_channels(const Var<Scalar>& x, std::span<const Index> indices);
template <typename Scalar>
Var<Scalar> slice_channels(const Var<Scalar>& x, Index begin, Index count);
template <typename Scalar>
Var<Scalar> concat_channels(std::span<const Var<Scalar>> parts);
template <typename Scalar>
Var<Scalar> concat_channels(std::initializer_list<Var<Scalar>> parts) {
  std::vector<Var<Scalar>> v(parts);
  return concat_channels(std::span<const Var<Scalar>>(v));
}

template <typename Scalar>
Var<Scalar> reshape(const Var<Scalar>& x, const Shape& shape);

/// Linear map across the h·w positions of every (sample, channel) row.
/// weight has shape (1, 1, out, h·w); bias (1, 1, 1, out) or undefined.
/// Result shape is (n, c, 1, out).
template <typename Scalar>
Var<Scalar> token_linear(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias);

/// Normalizes across channels at every (sample, position); gamma and beta
/// have shape (1, c, 1, 1).
template <typename Scalar>
Var<Scalar> layer_norm_channels(const Var<Scalar>& x, const Var<Scalar>& gamma,
                                const Var<Scalar>& beta, Scalar eps);

/// Mean over spatial positions, result (n, c, 1, 1).
template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x);

/// Batch-mean cross entropy against label-smoothed targets: the true class
/// gets 1 - eps, every other class eps / (C - 1). logits: (n, C, 1, 1).
template <typename Scalar>
Var<Scalar> smoothed_cross_entropy(const Var<Scalar>& logits, std::span<const int> labels,
                                   double eps);

/// Multiply-accumulate tally for convolutions and linear maps executed on this
/// thread while the counter is alive.
class MacCounter {
 public:
  MacCounter();
  ~MacCounter();
  MacCounter(const MacCounter&) = delete;
  MacCounter& operator=(const MacCounter&) = delete;

  std::uint64_t macs() const { return macs_; }
  static void add(std::uint64_t macs);

 private:
  std::uint64_t macs_ = 0;
  MacCounter* previous_;
};

}  // namespace cvsnet

#endif  // CVSNET_OPS_HPP_
