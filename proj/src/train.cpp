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

#include "cvsnet/train.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "cvsnet/checkpoint.hpp"

namespace cvsnet {

using nlohmann::json;

void TrainConfig::validate() const {
  CVSNET_CHECK(epochs >= 0, ArgumentError, "train: epochs must be non-negative");
  CVSNET_CHECK(warmup_epochs >= 0 && (epochs == 0 || warmup_epochs < epochs), ArgumentError,
               "train: warmup_epochs (", warmup_epochs, ") must be smaller than epochs (", epochs,
               ")");
  CVSNET_CHECK(batch_size >= 1, ArgumentError, "train: batch_size must be at least 1");
  CVSNET_CHECK(base_lr > 0 && std::isfinite(base_lr), ArgumentError,
               "train: base_lr must be positive");
  CVSNET_CHECK(weight_decay >= 0, ArgumentError, "train: weight_decay must be non-negative");
  CVSNET_CHECK(label_smoothing >= 0 && label_smoothing < 1, ArgumentError,
               "train: label_smoothing must be in [0, 1)");
  CVSNET_CHECK(max_steps_per_epoch >= 0 && max_eval_samples >= 0, ArgumentError,
               "train: caps must be non-negative");
  CVSNET_CHECK(augment.flip_probability >= 0 && augment.flip_probability <= 1, ArgumentError,
               "train: flip probability must be in [0, 1]");
  CVSNET_CHECK(augment.crop_padding >= 0, ArgumentError, "train: crop padding must be >= 0");
}

json TrainConfig::to_json_value() const {
  return json{{"epochs", epochs},
              {"warmup_epochs", warmup_epochs},
              {"batch_size", batch_size},
              {"base_lr", base_lr},
              {"weight_decay", weight_decay},
              {"label_smoothing", label_smoothing},
              {"seed", seed},
              {"max_steps_per_epoch", max_steps_per_epoch},
              {"max_eval_samples", max_eval_samples},
              {"augment",
               {{"enabled", augment.enabled},
                {"flip_probability", augment.flip_probability},
                {"crop_padding", augment.crop_padding},
                {"min_area", augment.min_area},
                {"max_log_aspect", augment.max_log_aspect}}}};
}

TrainConfig TrainConfig::from_json_value(const json& j) {
  TrainConfig c;
  CVSNET_CHECK(j.is_object(), ArgumentError, "train config must be a JSON object");
  auto get = [&](const json& obj, const char* key, auto& out) {
    if (obj.contains(key)) out = obj.at(key).get<std::decay_t<decltype(out)>>();
  };
  for (const auto& item : j.items()) {
    static const std::set<std::string> keys = {
        "epochs",   "warmup_epochs", "batch_size",          "base_lr",          "weight_decay",
        "label_smoothing", "seed",   "max_steps_per_epoch", "max_eval_samples", "augment"};
    CVSNET_CHECK(keys.count(item.key()) > 0, ArgumentError, "train config: unknown key '",
                 item.key(), "'");
  }
  try {
    get(j, "epochs", c.epochs);
    get(j, "warmup_epochs", c.warmup_epochs);
    get(j, "batch_size", c.batch_size);
    get(j, "base_lr", c.base_lr);
    get(j, "weight_decay", c.weight_decay);
    get(j, "label_smoothing", c.label_smoothing);
    get(j, "seed", c.seed);
    get(j, "max_steps_per_epoch", c.max_steps_per_epoch);
    get(j, "max_eval_samples", c.max_eval_samples);
    if (j.contains("augment")) {
      const json& a = j.at("augment");
      for (const auto& item : a.items()) {
        static const std::set<std::string> keys = {"enabled", "flip_probability", "crop_padding",
                                                   "min_area", "max_log_aspect"};
        CVSNET_CHECK(keys.count(item.key()) > 0, ArgumentError,
                     "train config: unknown key 'augment.", item.key(), "'");
      }
      get(a, "enabled", c.augment.enabled);
      get(a, "flip_probability", c.augment.flip_probability);
      get(a, "crop_padding", c.augment.crop_padding);
      get(a, "min_area", c.augment.min_area);
      get(a, "max_log_aspect", c.augment.max_log_aspect);
    }
  } catch (const json::exception& e) {
    throw ArgumentError(detail::concat("train config: ", e.what()));
  }
  c.validate();
  return c;
}

json EpochMetrics::to_json_value() const {
  json j{{"epoch", epoch},
         {"lr", lr},
         {"steps", steps},
         {"train_loss", train_loss},
         {"train_top1", train_top1},
         {"train_top5", train_top5}};
  if (has_val) {
    j["val_top1"] = val_top1;
    j["val_top5"] = val_top5;
  }
  return j;
}

std::string EpochMetrics::to_jsonl() const { return to_json_value().dump() + "\n"; }

template <typename Scalar>
Index label_rank(const Scalar* logits, Index classes, int label) {
  CVSNET_CHECK(label >= 0 && label < classes, ArgumentError, "label ", label,
               " out of range for ", classes, " classes");
  const Scalar target = logits[label];
  Index rank = 0;
  for (Index j = 0; j < classes; ++j) {
    if (logits[j] > target || (logits[j] == target && j < label)) ++rank;
  }
  return rank;
}

template <typename Scalar>
void accumulate_topk(const Tensor<Scalar>& logits, std::span<const int> labels, EvalResult& acc) {
  const Shape s = logits.shape();
  CVSNET_CHECK(s.h == 1 && s.w == 1 && s.n == static_cast<Index>(labels.size()), ShapeError,
               "accumulate_topk: logits ", s, " for ", labels.size(), " labels");
  for (Index n = 0; n < s.n; ++n) {
    const Index rank = label_rank(logits.plane_data(n, 0), s.c, labels[n]);
    acc.count += 1;
    acc.top1_hits += rank < 1 ? 1 : 0;
    acc.top5_hits += rank < 5 ? 1 : 0;
  }
}

template <typename Scalar>
EvalResult evaluate(const CvsNet<Scalar>& model, const Dataset& ds, Index batch_size,
                    Index max_samples) {
  const Index total = max_samples > 0 ? std::min(max_samples, ds.size()) : ds.size();
  CVSNET_CHECK(total > 0, ArgumentError, "evaluate: the split is empty");
  CVSNET_CHECK(batch_size >= 1, ArgumentError, "evaluate: batch_size must be at least 1");
  NoGradGuard no_grad;
  EvalResult acc;
  std::vector<Index> idx;
  for (Index start = 0; start < total; start += batch_size) {
    idx.clear();
    for (Index i = start; i < std::min(total, start + batch_size); ++i) idx.push_back(i);
    const Batch<Scalar> b = load_batch<Scalar>(ds, idx, model.config().input_resolution);
    const ForwardResult<Scalar> out = model.forward(b.images);
    accumulate_topk(out.logits.value(), std::span<const int>(b.labels), acc);
  }
  return acc;
}

template <typename Scalar>
std::string first_non_finite(const CvsNet<Scalar>& model, const ForwardResult<Scalar>* fwd) {
  if (fwd != nullptr) {
    for (const auto& [name, v] : fwd->taps.entries) {
      if (v.defined() && !v.value().all_finite()) return "tap " + name;
    }
    if (fwd->logits.defined() && !fwd->logits.value().all_finite()) return "logits";
  }
  for (const auto& p : model.parameters()) {
    if (!p.var.value().all_finite()) return "parameter " + p.name;
  }
  for (const auto& p : model.parameters()) {
    if (p.var.has_grad() && !p.var.grad().all_finite()) return "gradient of " + p.name;
  }
  return {};
}

template <typename Scalar>
TrainResult train(CvsNet<Scalar>& model, const Dataset& train_set, const Dataset* val_set,
                  const TrainConfig& cfg, const TrainOutputs& outputs,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
  cfg.validate();
  TrainResult result;
  if (cfg.epochs == 0) return result;
  CVSNET_CHECK(train_set.size() > 0, ArgumentError, "train: the training split is empty");
  const Index classes = model.config().head.classes;
  for (int label : train_set.labels) {
    CVSNET_CHECK(label >= 0 && label < classes, ArgumentError, "train: label ", label,
                 " does not fit a model with ", classes, " classes");
  }

  namespace fs = std::filesystem;
  std::ofstream metrics;
  if (!outputs.dir.empty()) {
    fs::create_directories(outputs.dir);
    metrics.open(fs::path(outputs.dir) / "metrics.jsonl", std::ios::trunc);
    CVSNET_CHECK(metrics.good(), IoError, "cannot write metrics log in '", outputs.dir, "'");
  }

  AdamWOptions opt;
  opt.lr = cfg.base_lr;
  opt.weight_decay = cfg.weight_decay;
  AdamW<Scalar> optimizer(model.parameters(), opt);
  const Index r = model.config().input_resolution;
  const Index n = train_set.size();

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    EpochMetrics m;
    m.epoch = epoch;
    m.lr = cosine_lr(epoch, cfg.epochs, cfg.warmup_epochs, cfg.base_lr);
    optimizer.set_lr(m.lr);
    const std::vector<Index> order = epoch_permutation(n, cfg.seed, static_cast<std::uint64_t>(epoch));
    EvalResult train_acc;
    double loss_sum = 0;
    for (Index start = 0; start < n; start += cfg.batch_size) {
      if (cfg.max_steps_per_epoch > 0 && m.steps >= cfg.max_steps_per_epoch) break;
      const Index count = std::min(cfg.batch_size, n - start);
      const std::span<const Index> idx(order.data() + start, static_cast<std::size_t>(count));
      const Batch<Scalar> batch = load_augmented_batch<Scalar>(
          train_set, idx, r, cfg.augment, cfg.seed, static_cast<std::uint64_t>(epoch));
      model.parameters().zero_grad();
      const ForwardResult<Scalar> fwd = model.forward(Var<Scalar>(batch.images));
      const Var<Scalar> loss = smoothed_cross_entropy(
          fwd.logits, std::span<const int>(batch.labels), cfg.label_smoothing);
      const double loss_value = static_cast<double>(loss.value().data()[0]);
      if (!std::isfinite(loss_value)) {
        std::string culprit = first_non_finite(model, &fwd);
        if (culprit.empty()) culprit = "loss";
        throw NonFiniteError(detail::concat("non-finite loss at epoch ", epoch, " step ", m.steps,
                                            "; first non-finite tensor: ", culprit));
      }
      backward(loss);
      optimizer.step();
      loss_sum += loss_value * static_cast<double>(count);
      accumulate_topk(fwd.logits.value(), std::span<const int>(batch.labels), train_acc);
      ++m.steps;
    }
    m.train_loss = train_acc.count ? loss_sum / static_cast<double>(train_acc.count) : 0;
    m.train_top1 = train_acc.top1();
    m.train_top5 = train_acc.top5();
    if (val_set != nullptr && val_set->size() > 0) {
      const EvalResult v = evaluate(model, *val_set, 100, cfg.max_eval_samples);
      m.has_val = true;
      m.val_top1 = v.top1();
      m.val_top5 = v.top5();
    }
    const double score = m.has_val ? m.val_top1 : m.train_top1;
    const bool best = score > result.best_val_top1;
    if (best) {
      result.best_val_top1 = score;
      result.best_epoch = epoch;
    }
    if (!outputs.dir.empty()) {
      metrics << m.to_jsonl();
      metrics.flush();
      if (outputs.checkpoint_every_epoch) {
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%03d.ckpt", epoch);
        save_checkpoint(model, (fs::path(outputs.dir) / name).string());
      }
      if (best) save_checkpoint(model, (fs::path(outputs.dir) / "best.ckpt").string());
    }
    result.log.push_back(m);
    if (on_epoch) on_epoch(m);
  }
  return result;
}

#define CVSNET_INSTANTIATE_TRAIN(S)                                                           \
  template Index label_rank(const S*, Index, int);                                            \
  template void accumulate_topk(const Tensor<S>&, std::span<const int>, EvalResult&);         \
  template EvalResult evaluate(const CvsNet<S>&, const Dataset&, Index, Index);               \
  template std::string first_non_finite(const CvsNet<S>&, const ForwardResult<S>*);           \
  template TrainResult train(CvsNet<S>&, const Dataset&, const Dataset*, const TrainConfig&,  \
                             const TrainOutputs&, const std::function<void(const EpochMetrics&)>&);

CVSNET_INSTANTIATE_TRAIN(float)
CVSNET_INSTANTIATE_TRAIN(double)

#undef CVSNET_INSTANTIATE_TRAIN

}  // namespace cvsnet
