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

#ifndef CVSNET_OPTIM_HPP_
#define CVSNET_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "cvsnet/params.hpp"

namespace cvsnet {

struct AdamWOptions {
  double lr = 1e-3;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW with decoupled weight decay: p -= lr·wd·p, then the bias-corrected
/// adaptive step p -= lr·m̂ / (sqrt(v̂) + eps).
template <typename Scalar>
class AdamW {
 public:
  AdamW(const ParameterSet<Scalar>& params, const AdamWOptions& options)
      : params_(params), options_(options) {
    for (const auto& p : params_) {
      first_.emplace_back(p.var.shape());
      second_.emplace_back(p.var.shape());
    }
  }

  /// Applies one update. Every parameter must carry a gradient.
  void step() {
    for (const auto& p : params_) {
      CVSNET_CHECK(p.var.has_grad(), ArgumentError, "adamw: parameter '", p.name,
                   "' has no gradient");
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(step_));
    const Scalar b1 = static_cast<Scalar>(options_.beta1);
    const Scalar b2 = static_cast<Scalar>(options_.beta2);
    const Scalar step_size = static_cast<Scalar>(options_.lr / bc1);
    const Scalar decay = static_cast<Scalar>(1.0 - options_.lr * options_.weight_decay);
    const Scalar inv_sqrt_bc2 = static_cast<Scalar>(1.0 / std::sqrt(bc2));
    const Scalar eps = static_cast<Scalar>(options_.eps);
    std::size_t i = 0;
    for (const auto& p : params_) {
      Var<Scalar> var = p.var;
      auto& value = var.mutable_value().array();
      const auto& g = var.grad().array();
      auto& m = first_[i].array();
      auto& v = second_[i].array();
      m = b1 * m + (Scalar(1) - b1) * g;
      v = b2 * v + (Scalar(1) - b2) * g.square();
      value *= decay;
      value -= step_size * m / (v.sqrt() * inv_sqrt_bc2 + eps);
      ++i;
    }
  }

  void set_lr(double lr) { options_.lr = lr; }
  double lr() const { return options_.lr; }
  std::int64_t step_count() const { return step_; }
  const AdamWOptions& options() const { return options_; }
  const Tensor<Scalar>& first_moment(std::size_t i) const { return first_[i]; }
  const Tensor<Scalar>& second_moment(std::size_t i) const { return second_[i]; }

 private:
  ParameterSet<Scalar> params_;
  AdamWOptions options_;
  std::vector<Tensor<Scalar>> first_;
  std::vector<Tensor<Scalar>> second_;
  std::int64_t step_ = 0;
};

/// Per-epoch learning rate: base·(epoch+1)/warmup during warm-up, then a
/// half-cosine from base_lr towards 0 over the remaining epochs.
inline double cosine_lr(int epoch, int total, int warmup, double base_lr) {
  CVSNET_CHECK(total > 0 && epoch >= 0 && epoch < total, ArgumentError, "cosine_lr: epoch ", epoch,
               " outside [0, ", total, ")");
  CVSNET_CHECK(warmup >= 0 && warmup < total, ArgumentError, "cosine_lr: warmup ", warmup,
               " must be in [0, ", total, ")");
  if (epoch < warmup) return base_lr * static_cast<double>(epoch + 1) / static_cast<double>(warmup);
  const double progress =
      static_cast<double>(epoch - warmup) / static_cast<double>(total - warmup);
  return base_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace cvsnet

#endif  // CVSNET_OPTIM_HPP_
