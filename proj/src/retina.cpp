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

#include "cvsnet/retina.hpp"

#include "cvsnet/ops.hpp"

namespace cvsnet {

namespace {

// Gains for `units` light-giving cells followed by `units` light-extracting ones.
template <typename Scalar>
void polarity_gains(Index units, double inhibitory, std::vector<Scalar>& center,
                    std::vector<Scalar>& surround) {
  for (Index u = 0; u < units; ++u) {
    center.push_back(Scalar(1));
    surround.push_back(static_cast<Scalar>(inhibitory));
  }
  for (Index u = 0; u < units; ++u) {
    center.push_back(static_cast<Scalar>(inhibitory));
    surround.push_back(Scalar(1));
  }
}

template <typename Scalar>
Var<Scalar> color_plane(const Var<Scalar>& rgb, ColorPlane plane) {
  switch (plane) {
    case ColorPlane::kR: return slice_channels(rgb, 0, 1);
    case ColorPlane::kG: return slice_channels(rgb, 1, 1);
    case ColorPlane::kB: return slice_channels(rgb, 2, 1);
    case ColorPlane::kY: return to_yellow(rgb);
  }
  throw ArgumentError("invalid color plane selector");
}

void require_rgb(const Shape& s, const char* op) {
  CVSNET_CHECK(s.c == 3, ShapeError, op, ": expected 3 input channels, got ", s.c);
}

}  // namespace

void RetinaConfig::validate() const {
  CVSNET_CHECK(units_per_cell_type > 0, ShapeError, "retina: units_per_cell_type must be positive");
  for (Index k : {small_kernel, large_kernel, m_center_kernel, m_surround_kernel}) {
    CVSNET_CHECK(k > 0 && k % 2 == 1, ShapeError, "retina: kernel sizes must be odd, got ", k);
  }
  CVSNET_CHECK(large_kernel > small_kernel, ShapeError, "retina: surround kernel ", large_kernel,
               " must exceed center kernel ", small_kernel);
  CVSNET_CHECK(m_surround_kernel > m_center_kernel, ShapeError, "retina: M surround kernel ",
               m_surround_kernel, " must exceed M center kernel ", m_center_kernel);
  CVSNET_CHECK(inner_stride > 0 && outer_stride > 0, ShapeError, "retina: strides must be positive");
  CVSNET_CHECK(inhibitory_gain < 0.0, ShapeError, "retina: inhibitory gain must be negative");
}

template <typename Scalar>
CenterSurround<Scalar>::CenterSurround(Index in_channels, Index out_channels, Index groups,
                                       Index center_kernel, Index surround_kernel, Index stride,
                                       std::vector<Scalar> cg, std::vector<Scalar> sg, Rng& rng)
    : center(ConvSpec::same(in_channels, out_channels, center_kernel, center_kernel, stride, groups),
             rng),
      surround(ConvSpec::same(in_channels, out_channels, surround_kernel, surround_kernel, stride,
                              groups),
               rng),
      center_gains(std::move(cg)),
      surround_gains(std::move(sg)) {
  validate();
}

template <typename Scalar>
void CenterSurround<Scalar>::validate() const {
  const ConvSpec& c = center.spec;
  const ConvSpec& s = surround.spec;
  CVSNET_CHECK(c.out_channels == s.out_channels && c.stride == s.stride, ShapeError,
               "center-surround: branches disagree on outputs or stride");
  CVSNET_CHECK(s.kernel_h > c.kernel_h && s.kernel_w > c.kernel_w, ShapeError,
               "center-surround: surround kernel ", s.kernel_h, "x", s.kernel_w,
               " must be strictly larger than center kernel ", c.kernel_h, "x", c.kernel_w);
  CVSNET_CHECK(static_cast<Index>(center_gains.size()) == c.out_channels &&
                   static_cast<Index>(surround_gains.size()) == c.out_channels,
               ShapeError, "center-surround: need one gain per output channel");
  for (std::size_t i = 0; i < center_gains.size(); ++i) {
    CVSNET_CHECK((center_gains[i] > 0) != (surround_gains[i] > 0) && center_gains[i] != 0 &&
                     surround_gains[i] != 0,
                 ShapeError, "center-surround: channel ", i,
                 " center and surround gains must have opposite signs");
  }
}

template <typename Scalar>
Var<Scalar> CenterSurround<Scalar>::forward(const Var<Scalar>& center_in,
                                            const Var<Scalar>& surround_in) const {
  const Var<Scalar> c = center(center_in);
  const Var<Scalar> s = surround(surround_in);
  CVSNET_CHECK(c.shape() == s.shape(), ShapeError, "center-surround: branch outputs ", c.shape(),
               " and ", s.shape(), " do not align");
  if (test_linear) {
    return scale_channels(c, std::span<const Scalar>(center_gains)) +
           scale_channels(s, std::span<const Scalar>(surround_gains));
  }
  return scaled_relu(c, std::span<const Scalar>(center_gains)) +
         scaled_relu(s, std::span<const Scalar>(surround_gains));
}

template <typename Scalar>
void CenterSurround<Scalar>::collect(ParameterSet<Scalar>& params,
                                     const std::string& prefix) const {
  center.collect(params, prefix + ".center");
  surround.collect(params, prefix + ".surround");
}

template <typename Scalar>
Var<Scalar> to_grey(const Var<Scalar>& rgb) {
  require_rgb(rgb.shape(), "to_grey");
  return slice_channels(rgb, 0, 1) + slice_channels(rgb, 1, 1) + slice_channels(rgb, 2, 1);
}

template <typename Scalar>
Var<Scalar> to_yellow(const Var<Scalar>& rgb) {
  require_rgb(rgb.shape(), "to_yellow");
  return slice_channels(rgb, 0, 1) + slice_channels(rgb, 1, 1);
}

template <typename Scalar>
OpponentUnit<Scalar>::OpponentUnit(ColorPlane plus_plane, ColorPlane minus_plane,
                                   const RetinaConfig& cfg, Rng& rng)
    : plus(plus_plane),
      minus(minus_plane),
      cells(1, 1, 1, cfg.small_kernel, cfg.large_kernel, 1, {Scalar(1)},
            {static_cast<Scalar>(cfg.inhibitory_gain)}, rng) {
  CVSNET_CHECK(plus != minus, ArgumentError, "opponent unit needs two distinct color planes");
}

template <typename Scalar>
Var<Scalar> opponent_forward(const OpponentUnit<Scalar>& unit, const Var<Scalar>& rgb) {
  require_rgb(rgb.shape(), "opponent_forward");
  CVSNET_CHECK(unit.plus != unit.minus, ArgumentError,
               "opponent unit needs two distinct color planes");
  return unit.cells.forward(color_plane(rgb, unit.plus), color_plane(rgb, unit.minus));
}

template <typename Scalar>
InnerPlexiform<Scalar>::InnerPlexiform(const RetinaConfig& config, Rng& rng) : cfg(config) {
  cfg.validate();
  const Index u = cfg.units_per_cell_type;
  std::vector<Scalar> cg, sg;
  for (int plane = 0; plane < 3; ++plane) polarity_gains(u, cfg.inhibitory_gain, cg, sg);
  color = CenterSurround<Scalar>(3, 3 * 2 * u, 3, cfg.small_kernel, cfg.large_kernel,
                                 cfg.inner_stride, cg, sg, rng);
  cg.clear();
  sg.clear();
  polarity_gains(u, cfg.inhibitory_gain, cg, sg);
  grey = CenterSurround<Scalar>(1, 2 * u, 1, cfg.small_kernel, cfg.large_kernel, cfg.inner_stride,
                                cg, sg, rng);
}

template <typename Scalar>
Var<Scalar> InnerPlexiform<Scalar>::operator()(const Var<Scalar>& rgb) const {
  require_rgb(rgb.shape(), "inner plexiform");
  return concat_channels({color(rgb), grey(to_grey(rgb))});
}

template <typename Scalar>
ChannelPartition InnerPlexiform<Scalar>::partition() const {
  const Index per = 2 * cfg.units_per_cell_type;
  ChannelPartition p;
  p.append("R", per).append("G", per).append("B", per).append("grey", per);
  return p;
}

template <typename Scalar>
void InnerPlexiform<Scalar>::collect(ParameterSet<Scalar>& params,
                                     const std::string& prefix) const {
  color.collect(params, prefix + ".color");
  grey.collect(params, prefix + ".grey");
}

template <typename Scalar>
OuterPlexiform<Scalar>::OuterPlexiform(const RetinaConfig& config, Rng& rng) : cfg(config) {
  cfg.validate();
  const Index u = cfg.units_per_cell_type;
  const Index opp = 4 * u;
  std::vector<Scalar> cg(opp, Scalar(1));
  std::vector<Scalar> sg(opp, static_cast<Scalar>(cfg.inhibitory_gain));
  p_cells = CenterSurround<Scalar>(opp, opp, opp, cfg.small_kernel, cfg.large_kernel,
                                   cfg.outer_stride, cg, sg, rng);
  nmp_cells = CenterSurround<Scalar>(opp, opp, opp, cfg.small_kernel, cfg.large_kernel,
                                     cfg.outer_stride, cg, sg, rng);
  cg.clear();
  sg.clear();
  polarity_gains(u, cfg.inhibitory_gain, cg, sg);
  m_cells = CenterSurround<Scalar>(2 * u, 2 * u, 1, cfg.m_center_kernel, cfg.m_surround_kernel,
                                   cfg.outer_stride, cg, sg, rng);
}

template <typename Scalar>
std::vector<Index> OuterPlexiform<Scalar>::p_plus_indices() const {
  const Index per = 2 * cfg.units_per_cell_type;
  std::vector<Index> idx;
  for (Index i = 0; i < per; ++i) idx.push_back(i);        // R+ of R+G−
  for (Index i = 0; i < per; ++i) idx.push_back(per + i);  // G+ of R−G+
  return idx;
}

template <typename Scalar>
std::vector<Index> OuterPlexiform<Scalar>::p_minus_indices() const {
  const Index per = 2 * cfg.units_per_cell_type;
  std::vector<Index> idx;
  for (Index i = 0; i < per; ++i) idx.push_back(per + i);
  for (Index i = 0; i < per; ++i) idx.push_back(i);
  return idx;
}

template <typename Scalar>
Var<Scalar> OuterPlexiform<Scalar>::operator()(const Var<Scalar>& rgb_part,
                                               const Var<Scalar>& grey_part) const {
  const Index per = 2 * cfg.units_per_cell_type;
  CVSNET_CHECK(rgb_part.shape().c == 3 * per, ShapeError, "outer plexiform: color part has ",
               rgb_part.shape().c, " channels, expected ", 3 * per);
  CVSNET_CHECK(grey_part.shape().c == per, ShapeError, "outer plexiform: grey part has ",
               grey_part.shape().c, " channels, expected ", per);
  const Shape a = rgb_part.shape(), b = grey_part.shape();
  CVSNET_CHECK(a.n == b.n && a.h == b.h && a.w == b.w, ShapeError,
               "outer plexiform: partitions misaligned ", a, " vs ", b);

  const std::vector<Index> plus = p_plus_indices();
  const std::vector<Index> minus = p_minus_indices();
  const Var<Scalar> p = p_cells.forward(select_channels(rgb_part, std::span<const Index>(plus)),
                                        select_channels(rgb_part, std::span<const Index>(minus)));

  const Var<Scalar> blue = slice_channels(rgb_part, 2 * per, per);
  const Var<Scalar> yellow = slice_channels(rgb_part, 0, per) + slice_channels(rgb_part, per, per);
  const Var<Scalar> nmp =
      nmp_cells.forward(concat_channels({blue, yellow}), concat_channels({yellow, blue}));

  const Var<Scalar> m = m_cells(grey_part);
  return concat_channels({p, nmp, m});
}

template <typename Scalar>
ChannelPartition OuterPlexiform<Scalar>::partition() const {
  const Index u = cfg.units_per_cell_type;
  ChannelPartition p;
  p.append("P", 4 * u).append("NMP", 4 * u).append("M", 2 * u);
  return p;
}

template <typename Scalar>
void OuterPlexiform<Scalar>::collect(ParameterSet<Scalar>& params,
                                     const std::string& prefix) const {
  p_cells.collect(params, prefix + ".p");
  nmp_cells.collect(params, prefix + ".nmp");
  m_cells.collect(params, prefix + ".m");
}

#define CVSNET_INSTANTIATE_RETINA(S)                                       \
  template struct CenterSurround<S>;                                       \
  template struct OpponentUnit<S>;                                         \
  template struct InnerPlexiform<S>;                                       \
  template struct OuterPlexiform<S>;                                       \
  template Var<S> to_grey(const Var<S>&);                                  \
  template Var<S> to_yellow(const Var<S>&);                                \
  template Var<S> opponent_forward(const OpponentUnit<S>&, const Var<S>&);

CVSNET_INSTANTIATE_RETINA(float)
CVSNET_INSTANTIATE_RETINA(double)

#undef CVSNET_INSTANTIATE_RETINA

}  // namespace cvsnet
