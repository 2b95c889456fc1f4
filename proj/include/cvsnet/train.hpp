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

#ifndef CVSNET_TRAIN_HPP_
#define CVSNET_TRAIN_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cvsnet/dataset.hpp"
#include "cvsnet/model.hpp"
#include "cvsnet/optim.hpp"

namespace cvsnet {

struct TrainConfig {
  int epochs = 20;
  int warmup_epochs = 2;
  Index batch_size = 64;
  double base_lr = 1e-3;
  double weight_decay = 0.05;
  double label_smoothing = 0.1;
  std::uint64_t seed = 0;
  AugmentOptions augment;
  /// Caps optimizer steps per epoch; 0 means a full pass.
  Index max_steps_per_epoch = 0;
  /// Cap on validation samples; 0 means all.
  Index max_eval_samples = 0;

  void validate() const;
  nlohmann::json to_json_value() const;
  static TrainConfig from_json_value(const nlohmann::json& j);
};

struct EpochMetrics {
  int epoch = 0;
  double lr = 0;
  Index steps = 0;
  double train_loss = 0;
  double train_top1 = 0;
  double train_top5 = 0;
  bool has_val = false;
  double val_top1 = 0;
  double val_top5 = 0;

  nlohmann::json to_json_value() const;
  /// One line of the metrics log.
  std::string to_jsonl() const;
};

struct EvalResult {
  Index count = 0;
  Index top1_hits = 0;
  Index top5_hits = 0;
  double top1() const { return count ? static_cast<double>(top1_hits) / count : 0; }
  double top5() const { return count ? static_cast<double>(top5_hits) / count : 0; }
};

/// Position of `label` when classes are sorted by descending logit, equal
/// logits ordered by class index. Hit at k means rank < k.
template <typename Scalar>
Index label_rank(const Scalar* logits, Index classes, int label);

/// Adds hits for logits (n, C, 1, 1) into `acc`.
template <typename Scalar>
void accumulate_topk(const Tensor<Scalar>& logits, std::span<const int> labels, EvalResult& acc);

template <typename Scalar>
EvalResult evaluate(const CvsNet<Scalar>& model, const Dataset& ds, Index batch_size = 100,
                    Index max_samples = 0);

struct TrainOutputs {
  std::string dir;  // empty: nothing is written
  bool checkpoint_every_epoch = true;
};

struct TrainResult {
  std::vector<EpochMetrics> log;
  int best_epoch = -1;
  double best_val_top1 = -1;
};

/// Epochs of shuffled mini-batch AdamW with the warmup + cosine schedule.
/// With an output dir, appends metrics.jsonl and writes epoch_NNN.ckpt and
/// best.ckpt. A non-finite loss throws NonFiniteError naming the first
/// non-finite tensor.
template <typename Scalar>
TrainResult train(CvsNet<Scalar>& model, const Dataset& train_set, const Dataset* val_set,
                  const TrainConfig& cfg, const TrainOutputs& outputs = {},
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

/// Name of the first tensor holding a NaN or infinity among a forward pass's
/// taps and logits, then the parameters and their gradients; empty if none.
template <typename Scalar>
std::string first_non_finite(const CvsNet<Scalar>& model, const ForwardResult<Scalar>* fwd);

}  // namespace cvsnet

#endif  // CVSNET_TRAIN_HPP_
