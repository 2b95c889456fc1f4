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

// Stimulus sweeps over brightness and hue, feature-change metrics at the
// model's tap points, and feature-map export.

#ifndef CVSNET_ABLATION_HPP_
#define CVSNET_ABLATION_HPP_

#include <string>
#include <vector>

#include "cvsnet/image_io.hpp"
#include "cvsnet/model.hpp"

namespace cvsnet {

/// Pixelwise multiply by `factor`, then clamp to [0, 1]. factor must be > 0.
template <typename Scalar>
Tensor<Scalar> adjust_brightness(const Tensor<Scalar>& images, double factor);

/// Adds `degrees` to every pixel's HSV hue (mod 360) and converts back;
/// saturation and value are preserved.
template <typename Scalar>
Tensor<Scalar> rotate_hue(const Tensor<Scalar>& images, double degrees);

/// ‖var − ref‖₂ / (‖ref‖₂ + 1e-8) over the whole tensor.
template <typename Scalar>
double feature_change(const Tensor<Scalar>& ref, const Tensor<Scalar>& var);

enum class SweepKind { kBrightness, kHue };
const char* sweep_kind_name(SweepKind k);

struct StimulusSweep {
  SweepKind kind = SweepKind::kBrightness;
  std::vector<double> values;

  static StimulusSweep brightness(std::vector<double> factors = {1.0, 0.8, 0.6, 0.4});
  static StimulusSweep hue(std::vector<double> degrees = {0, 60, 120, 180, 240, 300});
  void validate() const;
  double identity_value() const { return kind == SweepKind::kBrightness ? 1.0 : 0.0; }
};

template <typename Scalar>
Tensor<Scalar> apply_variant(const Tensor<Scalar>& images, SweepKind kind, double value);

/// Plain conv3×3 → ReLU → conv3×3 → ReLU stack with biases, standing in for
/// an ordinary CNN block in the contrast row of the report.
template <typename Scalar>
struct BaselineBlock {
  Conv2d<Scalar> conv1;
  Conv2d<Scalar> conv2;

  BaselineBlock() = default;
  BaselineBlock(Index channels, Index stride, std::uint64_t seed);
  Var<Scalar> operator()(const Var<Scalar>& x) const;
};

struct ChangeReport {
  SweepKind kind = SweepKind::kBrightness;
  std::vector<double> values;
  std::vector<std::string> taps;
  std::vector<std::vector<double>> metrics;  // [tap][variant]
  double m_change = 0;  // mean lgn.m change over non-identity variants
  double p_change = 0;
  double k_change = 0;
  std::string ordering;           // pathways sorted by ascending change, e.g. "M<P<K"
  std::string expected_ordering;  // "M<P<K" for brightness, empty otherwise
  bool ordering_matches_expected = false;
  Index baseline_channels = 0;
  std::vector<double> baseline_metrics;  // [variant]
  std::vector<std::string> images;       // written files, relative to the output dir

  nlohmann::json to_json_value() const;
  /// Key-sorted JSON text.
  std::string to_json() const;
};

/// Orders pathway changes ascending; ties keep M, P, K order.
std::string pathway_ordering(double m, double p, double k);

/// Runs every variant through the model, compares each tap with the identity
/// variant and, when `out_dir` is non-empty, writes stimulus images,
/// per-tap feature maps and one grid per tap. image: (1, 3, r, r).
template <typename Scalar>
ChangeReport run_sweep(const CvsNet<Scalar>& model, const Tensor<Scalar>& image,
                       const StimulusSweep& sweep, const std::vector<std::string>& taps,
                       const std::string& out_dir = {});

/// Channel-mean map of the single batch element, min–max scaled to
/// 0…255 (lround), constant maps as 128, as greyscale RGB triplets.
template <typename Scalar>
Image8 feature_map_image(const Tensor<Scalar>& t);

template <typename Scalar>
Image8 export_feature_map(const Tensor<Scalar>& t, const std::string& path);

/// Per-channel maps, each normalized on its own, tiled `columns` wide with a
/// one-pixel black gutter.
template <typename Scalar>
Image8 export_channel_grid(const Tensor<Scalar>& t, const std::string& path, Index columns = 8);

/// Images tiled left to right at a common height (nearest-neighbour scaling
/// to `cell`×`cell`) with a two-pixel black gutter.
Image8 tile_images(const std::vector<Image8>& images, Index cell);

}  // namespace cvsnet

#endif  // CVSNET_ABLATION_HPP_
