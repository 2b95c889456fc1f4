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

#ifndef CVSNET_PARAMS_HPP_
#define CVSNET_PARAMS_HPP_

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "cvsnet/autograd.hpp"
#include "cvsnet/rng.hpp"

namespace cvsnet {

template <typename Scalar>
struct NamedParameter {
  std::string name;
  Var<Scalar> var;
};

/// Ordered, named view of a model's trainable tensors. Order is the
/// registration order and is part of the checkpoint contract.
template <typename Scalar>
class ParameterSet {
 public:
  void add(std::string name, const Var<Scalar>& var) {
    CVSNET_CHECK(find(name) == nullptr, ArgumentError, "duplicate parameter name '", name, "'");
    params_.push_back({std::move(name), var});
  }

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  std::size_t size() const { return params_.size(); }
  const NamedParameter<Scalar>& operator[](std::size_t i) const { return params_[i]; }

  const Var<Scalar>* find(const std::string& name) const {
    for (const auto& p : params_) {
      if (p.name == name) return &p.var;
    }
    return nullptr;
  }

  Index numel() const {
    Index total = 0;
    for (const auto& p : params_) total += p.var.value().size();
    return total;
  }

  void zero_grad() {
    for (auto& p : params_) p.var.zero_grad();
  }

 private:
  std::vector<NamedParameter<Scalar>> params_;
};

/// Trainable leaf filled with N(0, 2 / fan_in). Values are drawn in double so
/// float and double models built from one seed agree.
template <typename Scalar>
Var<Scalar> kaiming_normal(const Shape& shape, Index fan_in, Rng& rng) {
  Tensor<Scalar> t(shape);
  const double std_dev = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (Index i = 0; i < t.size(); ++i) t.array()[i] = static_cast<Scalar>(std_dev * rng.normal());
  return Var<Scalar>(std::move(t), true);
}

/// Trainable leaf filled with U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
template <typename Scalar>
Var<Scalar> uniform_fan_in(const Shape& shape, Index fan_in, Rng& rng) {
  Tensor<Scalar> t(shape);
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (Index i = 0; i < t.size(); ++i) t.array()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
  return Var<Scalar>(std::move(t), true);
}

template <typename Scalar>
Var<Scalar> constant_parameter(const Shape& shape, Scalar value) {
  return Var<Scalar>(Tensor<Scalar>::constant(shape, value), true);
}

}  // namespace cvsnet

#endif  // CVSNET_PARAMS_HPP_
