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

// Abstract head: per-group mixer blocks, channel halving, a global mixer over
// the concatenation, global average pooling and a linear classifier.
//
// Tokens are the spatial positions of the striate maps. A mixer block is
//
//   x ← x + T₂ σ(T₁ LN(x))      token mixing (across h·w)
//   x ← x + C₂ σ(C₁ LN(x))      channel mixing (1×1 convolutions)

#ifndef CVSNET_HEAD_HPP_
#define CVSNET_HEAD_HPP_

#include <array>
#include <string>
#include <vector>

#include "cvsnet/conv.hpp"
#include "cvsnet/striate.hpp"

namespace cvsnet {

enum class Activation { kGelu, kTanh };

const char* activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct MixerBlockSpec {
  Index token_count = 1;
  Index channel_count = 1;
  Index token_hidden = 1;
  Index channel_hidden = 1;
  Activation activation = Activation::kGelu;

  void validate() const;
  friend bool operator==(const MixerBlockSpec&, const MixerBlockSpec&) = default;
};

struct HeadConfig {
  static constexpr Index kGroups = 6;
  Index classes = 1000;
  double token_expand = 0.5;
  Index channel_expand = 2;
  double ln_eps = 1e-5;
  Activation activation = Activation::kGelu;

  void validate() const;
  /// Mixer geometry for a group of `channels` over `tokens` positions.
  MixerBlockSpec mixer_spec(Index tokens, Index channels) const;
  friend bool operator==(const HeadConfig&, const HeadConfig&) = default;
};

/// 1×1 convolution initialized like a dense layer: U(±1/sqrt(fan_in)) for
/// both weight and bias.
template <typename Scalar>
Conv2d<Scalar> pointwise_linear(Index in, Index out, bool bias, Rng& rng);

template <typename Scalar>
Var<Scalar> apply_activation(const Var<Scalar>& x, Activation a);

template <typename Scalar>
struct MixerBlock {
  MixerBlockSpec spec;
  Scalar ln_eps = Scalar(1e-5);
  Var<Scalar> token_norm_gamma;
  Var<Scalar> token_norm_beta;
  Var<Scalar> token_w1;  // (1, 1, token_hidden, tokens)
  Var<Scalar> token_b1;  // (1, 1, 1, token_hidden)
  Var<Scalar> token_w2;  // (1, 1, tokens, token_hidden)
  Var<Scalar> token_b2;  // (1, 1, 1, tokens)
  Var<Scalar> channel_norm_gamma;
  Var<Scalar> channel_norm_beta;
  Conv2d<Scalar> channel_fc1;
  Conv2d<Scalar> channel_fc2;

  MixerBlock() = default;
  MixerBlock(const MixerBlockSpec& s, double eps, Rng& rng);

  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
  /// Zeroes the output projections so the block is the identity.
  void zero_output_projections();
};

/// Applies one mixer block; x is (n, channel_count, h, w) with
/// h·w == token_count. Shape is preserved.
template <typename Scalar>
Var<Scalar> group_mix(const MixerBlock<Scalar>& block, const Var<Scalar>& x);

/// Per-group pointwise c → max(1, c/2) maps, then channel concatenation.
template <typename Scalar>
Var<Scalar> halve_and_concat(std::span<const Conv2d<Scalar>> halvers,
                             std::span<const Var<Scalar>> groups);

inline Index halved_channels(Index c) { return c / 2 > 0 ? c / 2 : 1; }

template <typename Scalar>
struct AbstractHead {
  HeadConfig cfg;
  std::array<Index, HeadConfig::kGroups> group_channels{};
  Index tokens = 0;
  std::vector<MixerBlock<Scalar>> group_mixers;
  std::vector<Conv2d<Scalar>> halvers;
  MixerBlock<Scalar> global_mixer;
  Var<Scalar> final_norm_gamma;
  Var<Scalar> final_norm_beta;
  Conv2d<Scalar> classifier;

  AbstractHead() = default;
  AbstractHead(const HeadConfig& config, const std::array<Index, HeadConfig::kGroups>& channels,
               Index token_count, Rng& rng);

  Index total_channels() const;
  /// Logits with shape (n, classes, 1, 1).
  Var<Scalar> operator()(const StriateOutputs<Scalar>& s) const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
};

template <typename Scalar>
Var<Scalar> head_forward(const AbstractHead<Scalar>& head, const StriateOutputs<Scalar>& s) {
  return head(s);
}

}  // namespace cvsnet

#endif  // CVSNET_HEAD_HPP_
