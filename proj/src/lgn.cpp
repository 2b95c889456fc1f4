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

#include "cvsnet/lgn.hpp"

#include <algorithm>
#include <cmath>

#include "cvsnet/ops.hpp"

namespace cvsnet {

namespace {

void require_groups(const ChannelPartition& input) {
  CVSNET_CHECK(!input.empty(), ShapeError, "lgn: missing channel partition of the retina output");
  for (const char* name : {"P", "NMP", "M"}) {
    CVSNET_CHECK(input.contains(name), ShapeError, "lgn: channel partition lacks group '", name,
                 "'");
  }
}

}  // namespace

void LgnConfig::validate() const {
  CVSNET_CHECK(m_expand >= 1 && p_expand >= 1 && k_expand >= 1, ShapeError,
               "lgn: expansion multipliers must be at least 1");
  for (Index k : {m_kernel, p_kernel, k_kernel}) {
    CVSNET_CHECK(k > 0 && k % 2 == 1, ShapeError, "lgn: kernel sizes must be odd, got ", k);
  }
  CVSNET_CHECK(stride > 0, ShapeError, "lgn: stride must be positive");
}

template <typename Scalar>
Lgn<Scalar>::Lgn(const LgnConfig& config, const ChannelPartition& input, bool bias, Rng& rng)
    : cfg(config) {
  cfg.validate();
  require_groups(input);
  m_in = input.at("M").count;
  p_in = input.at("P").count;
  nmp_in = input.at("NMP").count;
  CVSNET_CHECK(p_in % 2 == 0, ShapeError, "lgn: P input has ", p_in,
               " channels, not divisible by 2 groups");
  CVSNET_CHECK(nmp_in % 2 == 0, ShapeError, "lgn: NMP input has ", nmp_in,
               " channels and cannot be split into two halves");
  const Index half = nmp_in / 2;
  m_conv = Conv2d<Scalar>(
      ConvSpec::same(m_in, 2 * cfg.m_expand * m_in, cfg.m_kernel, cfg.m_kernel, cfg.stride, 1, bias),
      rng);
  p_conv = Conv2d<Scalar>(
      ConvSpec::same(p_in, 2 * cfg.p_expand * p_in, cfg.p_kernel, cfg.p_kernel, cfg.stride, 2, bias),
      rng);
  k_color_conv = Conv2d<Scalar>(ConvSpec::same(half, 2 * cfg.k_expand * half, cfg.k_kernel,
                                               cfg.k_kernel, cfg.stride, half, bias),
                                rng);
  k_grey_conv = Conv2d<Scalar>(ConvSpec::same(half, 2 * cfg.k_expand * half, cfg.k_kernel,
                                              cfg.k_kernel, cfg.stride, 1, bias),
                               rng);
}

template <typename Scalar>
PathwayBundle<Scalar> Lgn<Scalar>::operator()(const Var<Scalar>& outer,
                                              const ChannelPartition& input) const {
  require_groups(input);
  CVSNET_CHECK(input.total() == outer.shape().c, ShapeError, "lgn: partition covers ",
               input.total(), " channels but input has ", outer.shape().c);
  const ChannelRange& m = input.at("M");
  const ChannelRange& p = input.at("P");
  const ChannelRange& nmp = input.at("NMP");
  CVSNET_CHECK(m.count == m_in && p.count == p_in && nmp.count == nmp_in, ShapeError,
               "lgn: partition sizes do not match the block configuration");

  PathwayBundle<Scalar> out;
  out.m = relu(m_conv(slice_channels(outer, m.begin, m.count)));
  Var<Scalar> p_input = slice_channels(outer, p.begin, p.count);
  if (use_shuffle) p_input = channel_shuffle(p_input, Index{2});
  out.p = relu(p_conv(p_input));
  const Index half = nmp.count / 2;
  out.k = concat_channels({relu(k_color_conv(slice_channels(outer, nmp.begin, half))),
                           relu(k_grey_conv(slice_channels(outer, nmp.begin + half, half)))});
  return out;
}

template <typename Scalar>
void Lgn<Scalar>::collect(ParameterSet<Scalar>& params, const std::string& prefix) const {
  m_conv.collect(params, prefix + ".m");
  p_conv.collect(params, prefix + ".p");
  k_color_conv.collect(params, prefix + ".k_color");
  k_grey_conv.collect(params, prefix + ".k_grey");
}

PathwayRatioReport pathway_ratio_report(const LgnConfig& cfg, const ChannelPartition& input) {
  require_groups(input);
  PathwayRatioReport r;
  r.m_channels = 2 * cfg.m_expand * input.at("M").count;
  r.p_channels = 2 * cfg.p_expand * input.at("P").count;
  r.k_channels = 2 * cfg.k_expand * input.at("NMP").count;
  const double total = static_cast<double>(r.m_channels + r.p_channels + r.k_channels);
  CVSNET_CHECK(total > 0, ShapeError, "pathway ratio: no channels");
  r.m_share = static_cast<double>(r.m_channels) / total;
  r.p_share = static_cast<double>(r.p_channels) / total;
  r.k_share = 1.0 - r.m_share - r.p_share;
  r.max_deviation = std::max({std::abs(r.m_share - 0.05), std::abs(r.p_share - 0.90),
                              std::abs(r.k_share - 0.05)});
  r.near_biological = r.max_deviation <= 0.05;
  return r;
}

template struct Lgn<float>;
template struct Lgn<double>;

}  // namespace cvsnet
