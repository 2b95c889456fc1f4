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

// CVSNet-1: inner plexiform → outer plexiform → LGN → striate cortex →
// abstract head, plus its configuration and cost accounting.

#ifndef CVSNET_MODEL_HPP_
#define CVSNET_MODEL_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "cvsnet/head.hpp"
#include "cvsnet/lgn.hpp"
#include "cvsnet/ops.hpp"
#include "cvsnet/retina.hpp"
#include "cvsnet/striate.hpp"

namespace cvsnet {

struct ModelConfig {
  std::string name = "default";
  Index input_resolution = 224;
  std::uint64_t seed = 0;
  bool conv_bias = false;  // LGN and striate convolutions; the retina never has biases
  RetinaConfig retina;
  LgnConfig lgn;
  StriateConfig striate;
  HeadConfig head;

  /// "default" (alias "imagenet"), "cifar" or "tiny".
  static ModelConfig preset(const std::string& name);

  /// Throws ShapeError naming the failing block.
  void validate() const;

  /// Canonical key-sorted JSON text. Parsing starts from the preset named by
  /// "name" (default when absent) and rejects unknown keys.
  std::string to_json() const;
  nlohmann::json to_json_value() const;
  static ModelConfig from_json(const std::string& text);
  static ModelConfig from_json_value(const nlohmann::json& j);
  static ModelConfig load(const std::string& path);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Spatial sizes and channel counts along the network.
struct ModelGeometry {
  Index input = 0;
  Index inner = 0;
  Index outer = 0;
  Index lgn = 0;
  Index striate = 0;
  Index inner_channels = 0;
  Index outer_channels = 0;
  Index lgn_m = 0;
  Index lgn_p = 0;
  Index lgn_k = 0;
  std::array<Index, HeadConfig::kGroups> striate_channels{};

  Index tokens() const { return striate * striate; }
};

ModelGeometry model_geometry(const ModelConfig& cfg);

inline constexpr std::array<std::string_view, 11> kTapNames = {
    "inner_out",          "outer_out",           "lgn.m",
    "lgn.p",              "lgn.k",               "striate.m_orient",
    "striate.m_direction", "striate.pib_orient", "striate.pib_direction",
    "striate.blob_direction", "striate.blob_conv"};

/// Named intermediate activations of one forward pass, in kTapNames order.
template <typename Scalar>
struct Taps {
  std::vector<std::pair<std::string, Var<Scalar>>> entries;

  const Var<Scalar>& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  std::vector<std::string> names() const;
};

template <typename Scalar>
struct ForwardResult {
  Var<Scalar> logits;  // (n, classes, 1, 1)
  Taps<Scalar> taps;
};

template <typename Scalar>
struct RetinaResult {
  Var<Scalar> inner;
  Var<Scalar> outer;
};

template <typename Scalar>
class CvsNet {
 public:
  explicit CvsNet(const ModelConfig& config);

  const ModelConfig& config() const { return cfg_; }
  const ModelGeometry& geometry() const { return geometry_; }
  const ChannelPartition& inner_partition() const { return inner_partition_; }
  const ChannelPartition& outer_partition() const { return outer_partition_; }

  ParameterSet<Scalar>& parameters() { return params_; }
  const ParameterSet<Scalar>& parameters() const { return params_; }

  /// images: (n, 3, r, r) with r the configured resolution.
  ForwardResult<Scalar> forward(const Var<Scalar>& images) const;
  ForwardResult<Scalar> forward(const Tensor<Scalar>& images) const {
    return forward(Var<Scalar>(images));
  }

  // Stages, exposed so tests can intervene between blocks.
  RetinaResult<Scalar> retina_forward(const Var<Scalar>& images) const;
  PathwayBundle<Scalar> lgn_forward(const Var<Scalar>& outer) const;
  StriateOutputs<Scalar> striate_forward(const PathwayBundle<Scalar>& bundle) const;
  Var<Scalar> head_forward(const StriateOutputs<Scalar>& s) const;

  const InnerPlexiform<Scalar>& inner() const { return inner_; }
  const OuterPlexiform<Scalar>& outer() const { return outer_; }
  const Lgn<Scalar>& lgn() const { return lgn_; }
  Lgn<Scalar>& lgn() { return lgn_; }
  const StriateCortex<Scalar>& striate() const { return striate_; }
  const AbstractHead<Scalar>& head() const { return head_; }
  AbstractHead<Scalar>& head() { return head_; }

 private:
  void check_images(const Shape& s) const;

  ModelConfig cfg_;
  ModelGeometry geometry_;
  InnerPlexiform<Scalar> inner_;
  OuterPlexiform<Scalar> outer_;
  ChannelPartition inner_partition_;
  ChannelPartition outer_partition_;
  Lgn<Scalar> lgn_;
  StriateCortex<Scalar> striate_;
  AbstractHead<Scalar> head_;
  ParameterSet<Scalar> params_;
};

using CvsNetF = CvsNet<float>;
using CvsNetD = CvsNet<double>;

struct BlockCost {
  std::string name;
  Index params = 0;
  std::uint64_t macs = 0;
  std::uint64_t flops() const { return 2 * macs; }
};

struct CostReport {
  Index params = 0;
  std::uint64_t macs = 0;
  Index resolution = 0;
  std::vector<BlockCost> blocks;

  std::uint64_t flops() const { return 2 * macs; }
  std::string text() const;
  nlohmann::json to_json_value() const;
};

/// Parameter count of `params` and multiply-accumulates executed by `fn`.
template <typename Scalar, typename Fn>
BlockCost count_cost(const std::string& name, const ParameterSet<Scalar>& params, Fn&& fn) {
  BlockCost c;
  c.name = name;
  c.params = params.numel();
  MacCounter counter;
  NoGradGuard no_grad;
  fn();
  c.macs = counter.macs();
  return c;
}

/// Batch-1 forward at the configured resolution, block by block.
template <typename Scalar>
CostReport count_params_flops(const CvsNet<Scalar>& model);

}  // namespace cvsnet

#endif  // CVSNET_MODEL_HPP_
