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

#include "cvsnet/striate.hpp"

#include "cvsnet/ops.hpp"

namespace cvsnet {

void StriateConfig::validate() const {
  CVSNET_CHECK(orient_n > 0 && orient_n % 2 == 1, ShapeError,
               "striate: orientation kernel length must be odd, got ", orient_n);
  for (Index k : {m_kernel, pib_kernel, blob_kernel}) {
    CVSNET_CHECK(k > 0 && k % 2 == 1, ShapeError, "striate: kernel sizes must be odd, got ", k);
  }
  CVSNET_CHECK(blob_branch_channels > 0, ShapeError, "striate: blob branch width must be positive");
  CVSNET_CHECK(shift >= 1, ShapeError, "striate: difference-map shift must be positive");
  CVSNET_CHECK(stride > 0, ShapeError, "striate: stride must be positive");
}

ConvSpec orientation_spec(Index in_channels, Index out_channels, Axis axis, Index n) {
  CVSNET_CHECK(n > 0 && n % 2 == 1, ArgumentError,
               "orientation conv: kernel length must be odd, got ", n);
  ConvSpec spec;
  spec.in_channels = in_channels;
  spec.out_channels = out_channels;
  if (axis == Axis::kHorizontal) {
    spec.kernel_h = 1;
    spec.kernel_w = n;
    spec.pad_w = (n - 1) / 2;
  } else {
    spec.kernel_h = n;
    spec.kernel_w = 1;
    spec.pad_h = (n - 1) / 2;
  }
  return spec;
}

template <typename Scalar>
Var<Scalar> orientation_conv(const Var<Scalar>& x, const Var<Scalar>& weight, Axis axis, Index n) {
  const ConvSpec spec = orientation_spec(x.shape().c, weight.shape().n, axis, n);
  return conv2d(x, weight, Var<Scalar>(), spec);
}

template <typename Scalar>
Var<Scalar> direction_stack(const Var<Scalar>& x, std::span<const Direction> directions,
                            Index shift) {
  std::vector<Var<Scalar>> maps;
  maps.reserve(directions.size());
  for (Direction d : directions) maps.push_back(difference_map(x, d, shift));
  return concat_channels(std::span<const Var<Scalar>>(maps));
}

template <typename Scalar>
DirectionBranch<Scalar>::DirectionBranch(std::vector<Direction> dirs, Index shift_k,
                                         Index channels, bool bias, Rng& rng)
    : directions(std::move(dirs)),
      shift(shift_k),
      mix(ConvSpec{static_cast<Index>(directions.size()) * channels, channels, 1, 1, 1, 0, 0, 1,
                   bias},
          rng) {}

template <typename Scalar>
Var<Scalar> DirectionBranch<Scalar>::operator()(const Var<Scalar>& stem) const {
  return relu(mix(direction_stack(stem, std::span<const Direction>(directions), shift)));
}

template <typename Scalar>
void DirectionBranch<Scalar>::collect(ParameterSet<Scalar>& params,
                                      const std::string& prefix) const {
  mix.collect(params, prefix + ".mix");
}

template <typename Scalar>
CorticalPath<Scalar>::CorticalPath(Index channels, Index stem_kernel, Index orient_n, Index stride,
                                   std::vector<Direction> dirs, Index shift, bool bias, Rng& rng)
    : stem(ConvSpec::same(channels, channels, stem_kernel, stem_kernel, stride, 1, bias), rng) {
  ConvSpec h = orientation_spec(channels, channels, Axis::kHorizontal, orient_n);
  ConvSpec v = orientation_spec(channels, channels, Axis::kVertical, orient_n);
  h.has_bias = v.has_bias = bias;
  orient_h = Conv2d<Scalar>(h, rng);
  orient_v = Conv2d<Scalar>(v, rng);
  direction = DirectionBranch<Scalar>(std::move(dirs), shift, channels, bias, rng);
}

template <typename Scalar>
Var<Scalar> CorticalPath<Scalar>::stem_forward(const Var<Scalar>& x) const {
  return relu(stem(x));
}

template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> CorticalPath<Scalar>::operator()(const Var<Scalar>& x) const {
  const Var<Scalar> s = stem_forward(x);
  Var<Scalar> orient = concat_channels({relu(orient_h(s)), relu(orient_v(s))});
  return {std::move(orient), direction(s)};
}

template <typename Scalar>
void CorticalPath<Scalar>::collect(ParameterSet<Scalar>& params, const std::string& prefix) const {
  stem.collect(params, prefix + ".stem");
  orient_h.collect(params, prefix + ".orient_h");
  orient_v.collect(params, prefix + ".orient_v");
  direction.collect(params, prefix + ".direction");
}

template <typename Scalar>
BlobPath<Scalar>::BlobPath(const StriateConfig& cfg, Index m_channels, Index p_channels,
                           Index k_channels, bool bias, Rng& rng) {
  const Index b = cfg.blob_branch_channels;
  m_proj = Conv2d<Scalar>(ConvSpec{m_channels, b, 1, 1, 1, 0, 0, 1, bias}, rng);
  p_proj = Conv2d<Scalar>(ConvSpec{p_channels, b, 1, 1, 1, 0, 0, 1, bias}, rng);
  k_proj = Conv2d<Scalar>(ConvSpec{k_channels, b, 1, 1, 1, 0, 0, 1, bias}, rng);
  const Index c = 3 * b;
  stem = Conv2d<Scalar>(
      ConvSpec::same(c, c, cfg.blob_kernel, cfg.blob_kernel, cfg.stride, 1, bias), rng);
  direction = DirectionBranch<Scalar>(
      std::vector<Direction>(kSimpleDirections.begin(), kSimpleDirections.end()), cfg.shift, c,
      bias, rng);
  conv = Conv2d<Scalar>(ConvSpec::same(c, c, cfg.blob_kernel, cfg.blob_kernel, 1, 1, bias), rng);
}

template <typename Scalar>
Var<Scalar> BlobPath<Scalar>::stem_forward(const PathwayBundle<Scalar>& bundle) const {
  return relu(stem(concat_channels({m_proj(bundle.m), p_proj(bundle.p), k_proj(bundle.k)})));
}

template <typename Scalar>
std::pair<Var<Scalar>, Var<Scalar>> BlobPath<Scalar>::operator()(
    const PathwayBundle<Scalar>& bundle) const {
  const Shape m = bundle.m.shape(), p = bundle.p.shape(), k = bundle.k.shape();
  CVSNET_CHECK(m.n == p.n && m.n == k.n && m.h == p.h && m.h == k.h && m.w == p.w && m.w == k.w,
               ShapeError, "blob path: pathway outputs misaligned ", m, ", ", p, ", ", k);
  const Var<Scalar> s = stem_forward(bundle);
  return {direction(s), relu(conv(s))};
}

template <typename Scalar>
void BlobPath<Scalar>::collect(ParameterSet<Scalar>& params, const std::string& prefix) const {
  m_proj.collect(params, prefix + ".m_proj");
  p_proj.collect(params, prefix + ".p_proj");
  k_proj.collect(params, prefix + ".k_proj");
  stem.collect(params, prefix + ".stem");
  direction.collect(params, prefix + ".direction");
  conv.collect(params, prefix + ".conv");
}

template <typename Scalar>
StriateCortex<Scalar>::StriateCortex(const StriateConfig& config, Index m_channels,
                                     Index p_channels, Index k_channels, bool bias, Rng& rng)
    : cfg(config) {
  cfg.validate();
  m_path = CorticalPath<Scalar>(
      m_channels, cfg.m_kernel, cfg.orient_n, cfg.stride,
      std::vector<Direction>(kComplexDirections.begin(), kComplexDirections.end()), cfg.shift, bias,
      rng);
  pib_path = CorticalPath<Scalar>(
      p_channels, cfg.pib_kernel, cfg.orient_n, cfg.stride,
      std::vector<Direction>(kSimpleDirections.begin(), kSimpleDirections.end()), cfg.shift, bias,
      rng);
  blob_path = BlobPath<Scalar>(cfg, m_channels, p_channels, k_channels, bias, rng);
}

template <typename Scalar>
StriateOutputs<Scalar> StriateCortex<Scalar>::operator()(const PathwayBundle<Scalar>& bundle) const {
  StriateOutputs<Scalar> out;
  std::tie(out.m_orient, out.m_direction) = m_path(bundle.m);
  std::tie(out.pib_orient, out.pib_direction) = pib_path(bundle.p);
  std::tie(out.blob_direction, out.blob_conv) = blob_path(bundle);
  return out;
}

template <typename Scalar>
void StriateCortex<Scalar>::collect(ParameterSet<Scalar>& params, const std::string& prefix) const {
  m_path.collect(params, prefix + ".m");
  pib_path.collect(params, prefix + ".pib");
  blob_path.collect(params, prefix + ".blob");
}

#define CVSNET_INSTANTIATE_STRIATE(S)                                                  \
  template struct DirectionBranch<S>;                                                  \
  template struct CorticalPath<S>;                                                     \
  template struct BlobPath<S>;                                                         \
  template struct StriateCortex<S>;                                                    \
  template Var<S> orientation_conv(const Var<S>&, const Var<S>&, Axis, Index);         \
  template Var<S> direction_stack(const Var<S>&, std::span<const Direction>, Index);

CVSNET_INSTANTIATE_STRIATE(float)
CVSNET_INSTANTIATE_STRIATE(double)

#undef CVSNET_INSTANTIATE_STRIATE

}  // namespace cvsnet
