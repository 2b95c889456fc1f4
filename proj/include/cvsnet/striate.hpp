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

// Striate cortex: three cortical paths over the LGN bundle.
//
//   M path     big-kernel stem → orientation (1×n, n×1) + complex direction (8)
//   P-IB path  small-kernel stem → orientation + simple direction (4)
//   Blob path  1×1 projections of M, P, K → stem → simple direction + conv
//
// Direction branches stack difference maps of the stem along the channel axis
// and fuse them with a learned 1×1 convolution.

#ifndef CVSNET_STRIATE_HPP_
#define CVSNET_STRIATE_HPP_

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cvsnet/conv.hpp"
#include "cvsnet/difference_map.hpp"
#include "cvsnet/lgn.hpp"

namespace cvsnet {

struct StriateConfig {
  Index orient_n = 5;
  Index m_kernel = 7;
  Index pib_kernel = 3;
  Index blob_kernel = 3;
  Index blob_branch_channels = 16;
  Index shift = 1;
  Index stride = 2;

  void validate() const;
  friend bool operator==(const StriateConfig&, const StriateConfig&) = default;
};

inline constexpr std::array<std::string_view, 6> kStriateOutputNames = {
    "m_orient", "m_direction", "pib_orient", "pib_direction", "blob_direction", "blob_conv"};

template <typename Scalar>
struct StriateOutputs {
  Var<Scalar> m_orient;
  Var<Scalar> m_direction;
  Var<Scalar> pib_orient;
  Var<Scalar> pib_direction;
  Var<Scalar> blob_direction;
  Var<Scalar> blob_conv;

  /// In kStriateOutputNames order.
  std::array<Var<Scalar>, 6> as_array() const {
    return {m_orient, m_direction, pib_orient, pib_direction, blob_direction, blob_conv};
  }
  std::vector<std::pair<std::string, Var<Scalar>>> named() const {
    std::vector<std::pair<std::string, Var<Scalar>>> out;
    const auto arr = as_array();
    for (std::size_t i = 0; i < arr.size(); ++i) out.emplace_back(kStriateOutputNames[i], arr[i]);
    return out;
  }
};

enum class Axis { kHorizontal, kVertical };

/// Spec for a 1×n (horizontal) or n×1 (vertical) convolution with padding
/// that preserves height and width. n must be odd.
ConvSpec orientation_spec(Index in_channels, Index out_channels, Axis axis, Index n);

template <typename Scalar>
Var<Scalar> orientation_conv(const Var<Scalar>& x, const Var<Scalar>& weight, Axis axis, Index n);

/// Difference maps of `x` for each direction, concatenated on channels.
template <typename Scalar>
Var<Scalar> direction_stack(const Var<Scalar>& x, std::span<const Direction> directions,
                            Index shift);

/// Difference maps fused by a 1×1 convolution and rectified.
template <typename Scalar>
struct DirectionBranch {
  std::vector<Direction> directions;
  Index shift = 1;
  Conv2d<Scalar> mix;

  DirectionBranch() = default;
  DirectionBranch(std::vector<Direction> dirs, Index shift, Index channels, bool bias, Rng& rng);
  Var<Scalar> operator()(const Var<Scalar>& stem) const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
};

/// Shared shape of the M and P-IB paths.
template <typename Scalar>
struct CorticalPath {
  Conv2d<Scalar> stem;
  Conv2d<Scalar> orient_h;
  Conv2d<Scalar> orient_v;
  DirectionBranch<Scalar> direction;

  CorticalPath() = default;
  CorticalPath(Index channels, Index stem_kernel, Index orient_n, Index stride,
               std::vector<Direction> dirs, Index shift, bool bias, Rng& rng);
  Var<Scalar> stem_forward(const Var<Scalar>& x) const;
  /// (orientation output, direction output)
  std::pair<Var<Scalar>, Var<Scalar>> operator()(const Var<Scalar>& x) const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
};

template <typename Scalar>
struct BlobPath {
  Conv2d<Scalar> m_proj;
  Conv2d<Scalar> p_proj;
  Conv2d<Scalar> k_proj;
  Conv2d<Scalar> stem;
  DirectionBranch<Scalar> direction;
  Conv2d<Scalar> conv;

  BlobPath() = default;
  BlobPath(const StriateConfig& cfg, Index m_channels, Index p_channels, Index k_channels, bool bias,
           Rng& rng);
  Var<Scalar> stem_forward(const PathwayBundle<Scalar>& bundle) const;
  /// (blob_direction, blob_conv)
  std::pair<Var<Scalar>, Var<Scalar>> operator()(const PathwayBundle<Scalar>& bundle) const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
};

template <typename Scalar>
struct StriateCortex {
  StriateConfig cfg;
  CorticalPath<Scalar> m_path;
  CorticalPath<Scalar> pib_path;
  BlobPath<Scalar> blob_path;

  StriateCortex() = default;
  StriateCortex(const StriateConfig& config, Index m_channels, Index p_channels, Index k_channels,
                bool bias, Rng& rng);
  StriateOutputs<Scalar> operator()(const PathwayBundle<Scalar>& bundle) const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
};

template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> m_path_forward(const StriateCortex<Scalar>& block,
                                                   const Var<Scalar>& m_in) {
  return block.m_path(m_in);
}
template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> pib_path_forward(const StriateCortex<Scalar>& block,
                                                     const Var<Scalar>& p_in) {
  return block.pib_path(p_in);
}
template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> blob_path_forward(const StriateCortex<Scalar>& block,
                                                      const PathwayBundle<Scalar>& bundle) {
  return block.blob_path(bundle);
}

}  // namespace cvsnet

#endif  // CVSNET_STRIATE_HPP_
