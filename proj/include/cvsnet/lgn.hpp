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

#ifndef CVSNET_LGN_HPP_
#define CVSNET_LGN_HPP_

#include <string>

#include "cvsnet/conv.hpp"
#include "cvsnet/partition.hpp"

namespace cvsnet {

/// Channel multipliers are 2·m_expand, 2·p_expand and 2·k_expand.
struct LgnConfig {
  Index m_expand = 1;
  Index p_expand = 2;
  Index k_expand = 1;
  Index m_kernel = 7;
  Index p_kernel = 3;
  Index k_kernel = 3;
  Index stride = 2;

  void validate() const;
  friend bool operator==(const LgnConfig&, const LgnConfig&) = default;
};

/// The three LGN pathways, kept as separate tensors.
template <typename Scalar>
struct PathwayBundle {
  Var<Scalar> m;
  Var<Scalar> p;
  Var<Scalar> k;
};

/// M: large-kernel conv over the M-type input. P: channel shuffle (2 groups)
/// then a group-2 small-kernel conv. K: depthwise conv over the first
/// (color-sensitive) half of NMP, ungrouped conv over the second half.
/// All outputs are rectified.
template <typename Scalar>
struct Lgn {
  LgnConfig cfg;
  Index m_in = 0;
  Index p_in = 0;
  Index nmp_in = 0;
  Conv2d<Scalar> m_conv;
  Conv2d<Scalar> p_conv;
  Conv2d<Scalar> k_color_conv;
  Conv2d<Scalar> k_grey_conv;
  bool use_shuffle = true;  // off only for the non-degeneracy check

  Lgn() = default;
  /// `input` must name groups "P", "NMP" and "M".
  Lgn(const LgnConfig& config, const ChannelPartition& input, bool bias, Rng& rng);

  PathwayBundle<Scalar> operator()(const Var<Scalar>& outer, const ChannelPartition& input) const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
};

template <typename Scalar>
PathwayBundle<Scalar> lgn_forward(const Lgn<Scalar>& block, const Var<Scalar>& outer,
                                  const ChannelPartition& input) {
  return block(outer, input);
}

/// Channel share of each pathway compared with the biological M/P/K split
/// (5% / 90% / 5%). Informational.
struct PathwayRatioReport {
  Index m_channels = 0;
  Index p_channels = 0;
  Index k_channels = 0;
  double m_share = 0;
  double p_share = 0;
  double k_share = 0;
  double max_deviation = 0;  // largest |share − biological share|
  bool near_biological = false;  // max_deviation ≤ 0.05
};

PathwayRatioReport pathway_ratio_report(const LgnConfig& cfg, const ChannelPartition& input);

}  // namespace cvsnet

#endif  // CVSNET_LGN_HPP_
