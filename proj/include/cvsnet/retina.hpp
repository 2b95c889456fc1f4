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

// Retina blocks: the inner plexiform splits light into color-sensitive (per
// RGB plane, never mixed) and color-insensitive (grey) center–surround
// populations; the outer plexiform builds the P (red/green), NMP (blue/yellow)
// and M (grey) opponent populations. Neither block contains a normalization
// layer and neither has biases.

#ifndef CVSNET_RETINA_HPP_
#define CVSNET_RETINA_HPP_

#include <string>
#include <vector>

#include "cvsnet/conv.hpp"
#include "cvsnet/partition.hpp"

namespace cvsnet {

struct RetinaConfig {
  Index units_per_cell_type = 4;
  Index small_kernel = 3;
  Index large_kernel = 7;
  /// M-type cells see a wider field than P/NMP cells.
  Index m_center_kernel = 7;
  Index m_surround_kernel = 11;
  Index inner_stride = 2;
  Index outer_stride = 2;
  /// Gain of the inhibitory rectifier; the excitatory one is +1.
  double inhibitory_gain = -0.3;

  void validate() const;
  Index inner_channels() const { return 3 * 2 * units_per_cell_type + 2 * units_per_cell_type; }
  Index outer_channels() const { return 4 * units_per_cell_type * 2 + 2 * units_per_cell_type; }

  friend bool operator==(const RetinaConfig&, const RetinaConfig&) = default;
};

/// A bank of center–surround cells. Output channel o is
///   relu_g(center(x))[o] + relu_h(surround(x))[o]
/// with g = center_gains[o], h = surround_gains[o] of opposite sign. In
/// test_linear mode the rectifiers are bypassed: g·center + h·surround.
template <typename Scalar>
struct CenterSurround {
  Conv2d<Scalar> center;
  Conv2d<Scalar> surround;
  std::vector<Scalar> center_gains;
  std::vector<Scalar> surround_gains;
  bool test_linear = false;

  CenterSurround() = default;
  /// Both convolutions share stride and groups; padding keeps them aligned.
  CenterSurround(Index in_channels, Index out_channels, Index groups, Index center_kernel,
                 Index surround_kernel, Index stride, std::vector<Scalar> center_gains,
                 std::vector<Scalar> surround_gains, Rng& rng);

  void validate() const;
  /// Center and surround read the same input.
  Var<Scalar> operator()(const Var<Scalar>& x) const { return forward(x, x); }
  /// Center reads `center_in`, surround reads `surround_in` (opponent cells).
  Var<Scalar> forward(const Var<Scalar>& center_in, const Var<Scalar>& surround_in) const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
};

template <typename Scalar>
Var<Scalar> center_surround_forward(const CenterSurround<Scalar>& unit, const Var<Scalar>& x) {
  return unit(x);
}

/// R + G + B per pixel (a sum, not a mean).
template <typename Scalar>
Var<Scalar> to_grey(const Var<Scalar>& rgb);
/// R + G per pixel.
template <typename Scalar>
Var<Scalar> to_yellow(const Var<Scalar>& rgb);

enum class ColorPlane { kR, kG, kB, kY };

/// A single opponent cell: excitatory small-kernel center on `plus`,
/// inhibitory large-kernel surround on `minus`.
template <typename Scalar>
struct OpponentUnit {
  ColorPlane plus = ColorPlane::kR;
  ColorPlane minus = ColorPlane::kG;
  CenterSurround<Scalar> cells;  // 1 -> 1 channel

  OpponentUnit() = default;
  OpponentUnit(ColorPlane plus_plane, ColorPlane minus_plane, const RetinaConfig& cfg, Rng& rng);
};

template <typename Scalar>
Var<Scalar> opponent_forward(const OpponentUnit<Scalar>& unit, const Var<Scalar>& rgb);

/// Output layout: for each of R, G, B then grey, `units` light-giving cells
/// followed by `units` light-extracting cells.
template <typename Scalar>
struct InnerPlexiform {
  RetinaConfig cfg;
  CenterSurround<Scalar> color;  // depthwise over RGB
  CenterSurround<Scalar> grey;

  InnerPlexiform() = default;
  InnerPlexiform(const RetinaConfig& config, Rng& rng);

  Var<Scalar> operator()(const Var<Scalar>& rgb) const;
  ChannelPartition partition() const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;
};

template <typename Scalar>
Var<Scalar> inner_plexiform_forward(const InnerPlexiform<Scalar>& block, const Var<Scalar>& rgb) {
  return block(rgb);
}

/// Output layout: P (R+G− then R−G+), NMP (B+Y− then B−Y+), M (giving then
/// extracting). Opponent cells pair inner channels with the same polarity and
/// unit index.
template <typename Scalar>
struct OuterPlexiform {
  RetinaConfig cfg;
  CenterSurround<Scalar> p_cells;
  CenterSurround<Scalar> nmp_cells;
  CenterSurround<Scalar> m_cells;

  OuterPlexiform() = default;
  OuterPlexiform(const RetinaConfig& config, Rng& rng);

  /// rgb_part: the 3·2·units color-sensitive inner channels; grey_part: the
  /// 2·units color-insensitive ones.
  Var<Scalar> operator()(const Var<Scalar>& rgb_part, const Var<Scalar>& grey_part) const;
  ChannelPartition partition() const;
  void collect(ParameterSet<Scalar>& params, const std::string& prefix) const;

  // Channel routing into the opponent cells (exposed for tests).
  std::vector<Index> p_plus_indices() const;
  std::vector<Index> p_minus_indices() const;
};

template <typename Scalar>
Var<Scalar> outer_plexiform_forward(const OuterPlexiform<Scalar>& block,
                                    const Var<Scalar>& rgb_part, const Var<Scalar>& grey_part) {
  return block(rgb_part, grey_part);
}

}  // namespace cvsnet

#endif  // CVSNET_RETINA_HPP_
