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

#ifndef CVSNET_AUTOGRAD_HPP_
#define CVSNET_AUTOGRAD_HPP_

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "cvsnet/tensor.hpp"

namespace cvsnet {

template <typename Scalar>
class Var;

namespace detail {

template <typename Scalar>
struct Node {
  using BackwardFn =
      std::function<void(const Tensor<Scalar>& grad_out, const Node& self,
                         std::span<Tensor<Scalar>* const> input_grads)>;

  Tensor<Scalar> value;
  Tensor<Scalar> grad;  // persistent, leaves only
  bool requires_grad = false;
  std::string op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  BackwardFn backward;

  bool is_leaf() const { return !backward; }
};

inline bool& grad_mode_flag() {
  thread_local bool enabled = true;
  return enabled;
}

}  // namespace detail

inline bool grad_enabled() { return detail::grad_mode_flag(); }

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : previous_(detail::grad_mode_flag()) { detail::grad_mode_flag() = false; }
  ~NoGradGuard() { detail::grad_mode_flag() = previous_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Handle to a value in the computation graph. Copies share the node.
template <typename Scalar>
class Var {
 public:
  using NodeType = detail::Node<Scalar>;

  Var() = default;
  explicit Var(Tensor<Scalar> value, bool requires_grad = false)
      : node_(std::make_shared<NodeType>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
  }

  bool defined() const { return static_cast<bool>(node_); }
  const Tensor<Scalar>& value() const { return node_->value; }
  /// In-place access for optimizers and checkpoint loading. Must not be used
  /// while a recorded graph still depends on this value.
  Tensor<Scalar>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& op() const { return node_->op; }

  bool has_grad() const { return !node_->grad.empty(); }
  const Tensor<Scalar>& grad() const { return node_->grad; }
  void zero_grad() { node_->grad = Tensor<Scalar>(); }

  const std::shared_ptr<NodeType>& node() const { return node_; }
  explicit Var(std::shared_ptr<NodeType> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<NodeType> node_;
};

using VarF = Var<float>;
using VarD = Var<double>;

/// Creates an op result. The graph edge is recorded only when grad mode is on
/// and at least one input requires a gradient.
template <typename Scalar>
Var<Scalar> record(std::string op, Tensor<Scalar> value, std::vector<Var<Scalar>> inputs,
                   typename detail::Node<Scalar>::BackwardFn backward) {
  auto node = std::make_shared<detail::Node<Scalar>>();
  node->value = std::move(value);
  node->op = std::move(op);
  bool needs = false;
  if (grad_enabled()) {
    for (const auto& in : inputs) needs = needs || in.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->inputs.reserve(inputs.size());
    for (auto& in : inputs) node->inputs.push_back(in.node());
    node->backward = std::move(backward);
  }
  return Var<Scalar>(std::move(node));
}

/// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
/// interior gradients live only for the duration of the sweep.
template <typename Scalar>
void backward(const Var<Scalar>& loss) {
  using NodeT = detail::Node<Scalar>;
  CVSNET_CHECK(loss.defined(), ArgumentError, "backward on undefined value");
  CVSNET_CHECK(loss.value().size() == 1, ShapeError, "backward requires a scalar, got shape ",
               loss.shape());
  if (!loss.requires_grad()) return;

  // Iterative post-order DFS.
  std::vector<NodeT*> order;
  std::unordered_set<NodeT*> seen;
  std::vector<std::pair<NodeT*, std::size_t>> stack{{loss.node().get(), 0}};
  seen.insert(loss.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      NodeT* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) stack.push_back({child, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  std::unordered_map<NodeT*, Tensor<Scalar>> interior;
  auto buffer_for = [&](NodeT* n) -> Tensor<Scalar>* {
    if (!n->requires_grad) return nullptr;
    if (n->is_leaf()) {
      if (n->grad.empty()) n->grad = Tensor<Scalar>(n->value.shape());
      return &n->grad;
    }
    auto [it, inserted] = interior.try_emplace(n);
    if (inserted) it->second = Tensor<Scalar>(n->value.shape());
    return &it->second;
  };

  NodeT* root = loss.node().get();
  if (root->is_leaf()) {
    buffer_for(root)->array() += Scalar(1);
    return;
  }
  interior[root] = Tensor<Scalar>::constant(root->value.shape(), Scalar(1));

  std::vector<Tensor<Scalar>*> input_grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    NodeT* node = *it;
    if (node->is_leaf()) continue;
    auto found = interior.find(node);
    if (found == interior.end()) continue;
    input_grads.clear();
    for (auto& in : node->inputs) input_grads.push_back(buffer_for(in.get()));
    node->backward(found->second, *node, std::span<Tensor<Scalar>* const>(input_grads));
    interior.erase(found);
  }
}

/// Names of every op reachable from `root` through recorded edges.
template <typename Scalar>
std::vector<std::string> graph_ops(const Var<Scalar>& root) {
  using NodeT = detail::Node<Scalar>;
  std::vector<std::string> ops;
  std::unordered_set<const NodeT*> seen;
  std::vector<const NodeT*> stack{root.node().get()};
  while (!stack.empty()) {
    const NodeT* n = stack.back();
    stack.pop_back();
    if (!seen.insert(n).second) continue;
    ops.push_back(n->op);
    for (const auto& in : n->inputs) stack.push_back(in.get());
  }
  return ops;
}

}  // namespace cvsnet

#endif  // CVSNET_AUTOGRAD_HPP_
