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

#include "cvsnet/head.hpp"

#include <algorithm>
#include <cmath>

#include "cvsnet/ops.hpp"

namespace cvsnet {

const char* activation_name(Activation a) {
  return a == Activation::kGelu ? "gelu" : "tanh";
}

Activation parse_activation(const std::string& name) {
  if (name == "gelu") return Activation::kGelu;
  if (name == "tanh") return Activation::kTanh;
  throw ArgumentError(detail::concat("unknown activation '", name, "' (expected gelu or tanh)"));
}

void MixerBlockSpec::validate() const {
  CVSNET_CHECK(token_count > 0 && channel_count > 0 && token_hidden > 0 && channel_hidden > 0,
               ShapeError, "mixer: dimensions must be positive (tokens ", token_count,
               ", channels ", channel_count, ", hidden ", token_hidden, "/", channel_hidden, ")");
}

void HeadConfig::validate() const {
  CVSNET_CHECK(classes > 0, ShapeError, "head: class count must be positive");
  CVSNET_CHECK(token_expand > 0 && std::isfinite(token_expand), ShapeError,
               "head: token expansion must be positive");
  CVSNET_CHECK(channel_expand > 0, ShapeError, "head: channel expansion must be positive");
  CVSNET_CHECK(ln_eps > 0, ShapeError, "head: layer-norm epsilon must be positive");
}

MixerBlockSpec HeadConfig::mixer_spec(Index tokens, Index channels) const {
  MixerBlockSpec s;
  s.token_count = tokens;
  s.channel_count = channels;
  s.token_hidden =
      std::max<Index>(1, static_cast<Index>(std::lround(token_expand * static_cast<double>(tokens))));
  s.channel_hidden = channel_expand * channels;
  s.activation = activation;
  return s;
}

template <typename Scalar>
Conv2d<Scalar> pointwise_linear(Index in, Index out, bool bias, Rng& rng) {
  Conv2d<Scalar> layer;
  layer.spec = ConvSpec{in, out, 1, 1, 1, 0, 0, 1, bias};
  layer.spec.validate();
  layer.weight = uniform_fan_in<Scalar>(layer.spec.weight_shape(), in, rng);
  if (bias) layer.bias = uniform_fan_in<Scalar>(Shape{1, 1, 1, out}, in, rng);
  return layer;
}

template <typename Scalar>
Var<Scalar> apply_activation(const Var<Scalar>& x, Activation a) {
  return a == Activation::kGelu ? gelu(x) : cvsnet::tanh(x);
}

template <typename Scalar>
MixerBlock<Scalar>::MixerBlock(const MixerBlockSpec& s, double eps, Rng& rng)
    : spec(s), ln_eps(static_cast<Scalar>(eps)) {
  spec.validate();
  const Index c = spec.channel_count;
  const Index t = spec.token_count;
  const Index th = spec.token_hidden;
  token_norm_gamma = constant_parameter<Scalar>(Shape{1, c, 1, 1}, 1);
  token_norm_beta = constant_parameter<Scalar>(Shape{1, c, 1, 1}, 0);
  token_w1 = uniform_fan_in<Scalar>(Shape{1, 1, th, t}, t, rng);
  token_b1 = uniform_fan_in<Scalar>(Shape{1, 1, 1, th}, t, rng);
  token_w2 = uniform_fan_in<Scalar>(Shape{1, 1, t, th}, th, rng);
  token_b2 = uniform_fan_in<Scalar>(Shape{1, 1, 1, t}, th, rng);
  channel_norm_gamma = constant_parameter<Scalar>(Shape{1, c, 1, 1}, 1);
  channel_norm_beta = constant_parameter<Scalar>(Shape{1, c, 1, 1}, 0);
  channel_fc1 = pointwise_linear<Scalar>(c, spec.channel_hidden, true, rng);
  channel_fc2 = pointwise_linear<Scalar>(spec.channel_hidden, c, true, rng);
}

template <typename Scalar>
void MixerBlock<Scalar>::collect(ParameterSet<Scalar>& params, const std::string& prefix) const {
  params.add(prefix + ".token_norm.gamma", token_norm_gamma);
  params.add(prefix + ".token_norm.beta", token_norm_beta);
  params.add(prefix + ".token_fc1.weight", token_w1);
  params.add(prefix + ".token_fc1.bias", token_b1);
  params.add(prefix + ".token_fc2.weight", token_w2);
  params.add(prefix + ".token_fc2.bias", token_b2);
  params.add(prefix + ".channel_norm.gamma", channel_norm_gamma);
  params.add(prefix + ".channel_norm.beta", channel_norm_beta);
  channel_fc1.collect(params, prefix + ".channel_fc1");
  channel_fc2.collect(params, prefix + ".channel_fc2");
}

template <typename Scalar>
void MixerBlock<Scalar>::zero_output_projections() {
  for (Var<Scalar>* v : {&token_w2, &token_b2, &channel_fc2.weight, &channel_fc2.bias}) {
    v->mutable_value().set_zero();
  }
}

template <typename Scalar>
Var<Scalar> group_mix(const MixerBlock<Scalar>& block, const Var<Scalar>& x) {
  const Shape s = x.shape();
  const MixerBlockSpec& spec = block.spec;
  CVSNET_CHECK(s.c == spec.channel_count && s.plane() == spec.token_count, ShapeError,
               "group_mix: input ", s, " does not match mixer with ", spec.channel_count,
               " channels and ", spec.token_count, " tokens");
  Var<Scalar> t = layer_norm_channels(x, block.token_norm_gamma, block.token_norm_beta,
                                      block.ln_eps);
  t = apply_activation(token_linear(t, block.token_w1, block.token_b1), spec.activation);
  t = reshape(token_linear(t, block.token_w2, block.token_b2), s);
  const Var<Scalar> y = x + t;
  Var<Scalar> c = layer_norm_channels(y, block.channel_norm_gamma, block.channel_norm_beta,
                                      block.ln_eps);
  c = block.channel_fc2(apply_activation(block.channel_fc1(c), spec.activation));
  return y + c;
}

template <typename Scalar>
Var<Scalar> halve_and_concat(std::span<const Conv2d<Scalar>> halvers,
                             std::span<const Var<Scalar>> groups) {
  CVSNET_CHECK(halvers.size() == groups.size() && !groups.empty(), ShapeError,
               "halve_and_concat: ", groups.size(), " groups for ", halvers.size(), " halving maps");
  const Shape first = groups[0].shape();
  std::vector<Var<Scalar>> halves;
  halves.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    const Shape s = groups[i].shape();
    CVSNET_CHECK(s.n == first.n && s.h == first.h && s.w == first.w, ShapeError,
                 "halve_and_concat: group ", i, " has shape ", s, ", misaligned with ", first);
    CVSNET_CHECK(halvers[i].spec.in_channels == s.c &&
                     halvers[i].spec.out_channels == halved_channels(s.c),
                 ShapeError, "halve_and_concat: halving map ", i, " does not fit ", s.c,
                 " channels");
    halves.push_back(halvers[i](groups[i]));
  }
  return concat_channels(std::span<const Var<Scalar>>(halves));
}

template <typename Scalar>
AbstractHead<Scalar>::AbstractHead(const HeadConfig& config,
                                   const std::array<Index, HeadConfig::kGroups>& channels,
                                   Index token_count, Rng& rng)
    : cfg(config), group_channels(channels), tokens(token_count) {
  cfg.validate();
  CVSNET_CHECK(tokens > 0, ShapeError, "head: token count must be positive");
  for (Index c : group_channels) {
    group_mixers.emplace_back(cfg.mixer_spec(tokens, c), cfg.ln_eps, rng);
  }
  for (Index c : group_channels) {
    halvers.push_back(pointwise_linear<Scalar>(c, halved_channels(c), true, rng));
  }
  const Index total = total_channels();
  global_mixer = MixerBlock<Scalar>(cfg.mixer_spec(tokens, total), cfg.ln_eps, rng);
  final_norm_gamma = constant_parameter<Scalar>(Shape{1, total, 1, 1}, 1);
  final_norm_beta = constant_parameter<Scalar>(Shape{1, total, 1, 1}, 0);
  classifier = pointwise_linear<Scalar>(total, cfg.classes, true, rng);
}

template <typename Scalar>
Index AbstractHead<Scalar>::total_channels() const {
  Index total = 0;
  for (Index c : group_channels) total += halved_channels(c);
  return total;
}

template <typename Scalar>
Var<Scalar> AbstractHead<Scalar>::operator()(const StriateOutputs<Scalar>& s) const {
  const auto groups = s.as_array();
  std::vector<Var<Scalar>> mixed;
  mixed.reserve(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    CVSNET_CHECK(groups[i].defined(), ShapeError, "head: striate output '",
                 kStriateOutputNames[i], "' is missing");
    mixed.push_back(group_mix(group_mixers[i], groups[i]));
  }
  Var<Scalar> total = halve_and_concat(std::span<const Conv2d<Scalar>>(halvers),
                                       std::span<const Var<Scalar>>(mixed));
  total = group_mix(global_mixer, total);
  total = layer_norm_channels(total, final_norm_gamma, final_norm_beta,
                              static_cast<Scalar>(cfg.ln_eps));
  return classifier(global_avg_pool(total));
}

template <typename Scalar>
void AbstractHead<Scalar>::collect(ParameterSet<Scalar>& params, const std::string& prefix) const {
  for (std::size_t i = 0; i < group_mixers.size(); ++i) {
    group_mixers[i].collect(params, prefix + ".mix." + std::string(kStriateOutputNames[i]));
  }
  for (std::size_t i = 0; i < halvers.size(); ++i) {
    halvers[i].collect(params, prefix + ".halve." + std::string(kStriateOutputNames[i]));
  }
  global_mixer.collect(params, prefix + ".global");
  params.add(prefix + ".final_norm.gamma", final_norm_gamma);
  params.add(prefix + ".final_norm.beta", final_norm_beta);
  classifier.collect(params, prefix + ".classifier");
}

#define CVSNET_INSTANTIATE_HEAD(S)                                                          \
  template Conv2d<S> pointwise_linear<S>(Index, Index, bool, Rng&);                         \
  template Var<S> apply_activation(const Var<S>&, Activation);                              \
  template struct MixerBlock<S>;                                                            \
  template Var<S> group_mix(const MixerBlock<S>&, const Var<S>&);                           \
  template Var<S> halve_and_concat(std::span<const Conv2d<S>>, std::span<const Var<S>>);    \
  template struct AbstractHead<S>;

CVSNET_INSTANTIATE_HEAD(float)
CVSNET_INSTANTIATE_HEAD(double)

#undef CVSNET_INSTANTIATE_HEAD

}  // namespace cvsnet
