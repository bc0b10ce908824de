// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/tensor/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>
#include <utility>

#include "cutmixsl/errors.hpp"

namespace cutmixsl::tensor {

namespace {
thread_local bool g_grad_enabled = true;

const detail::Node& checked(const std::shared_ptr<detail::Node>& node) {
  if (!node) throw ContractError("operation on an undefined tensor");
  return *node;
}
}  // namespace

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ", ";
    s += std::to_string(shape[i]);
  }
  return s + ")";
}

std::vector<float>& detail::Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0f);
  return grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0f, requires_grad); }

Tensor Tensor::full(Shape shape, float value, bool requires_grad) {
  auto node = std::make_shared<detail::Node>();
  node->value.assign(tensor::numel(shape), value);
  node->shape = std::move(shape);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_values(Shape shape, std::vector<float> values, bool requires_grad) {
  if (values.size() != tensor::numel(shape)) {
    throw DimensionError("from_values: " + std::to_string(values.size()) +
                         " values for shape " + shape_string(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(float value, bool requires_grad) { return from_values({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return checked(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const auto& s = shape();
  if (axis >= s.size()) throw DimensionError("dim: axis out of range for " + shape_string(s));
  return s[axis];
}

std::size_t Tensor::numel() const { return checked(node_).value.size(); }

std::span<const float> Tensor::values() const { return checked(node_).value; }

std::span<float> Tensor::mutable_values() {
  checked(node_);
  return node_->value;
}

float Tensor::item() const {
  const auto& node = checked(node_);
  if (node.value.size() != 1) throw ContractError("item: tensor is not a scalar " + shape_string(node.shape));
  return node.value[0];
}

double Tensor::item_f64() const {
  const auto& node = checked(node_);
  if (node.value.size() != 1) throw ContractError("item_f64: tensor is not a scalar " + shape_string(node.shape));
  return std::isnan(node.exact) ? node.value[0] : node.exact;
}

bool Tensor::requires_grad() const { return checked(node_).requires_grad; }
bool Tensor::is_leaf() const { return checked(node_).is_leaf(); }
bool Tensor::has_grad() const { return !checked(node_).grad.empty(); }
std::span<const float> Tensor::grad() const { return checked(node_).grad; }

std::span<float> Tensor::mutable_grad() {
  checked(node_);
  return node_->ensure_grad();
}

void Tensor::zero_grad() {
  checked(node_);
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0f);
}

Tensor Tensor::clone(bool requires_grad) const {
  const auto& node = checked(node_);
  return from_values(node.shape, node.value, requires_grad);
}

const char* Tensor::op_name() const { return checked(node_).op; }

std::vector<const detail::Node*> topological_order(const Tensor& root) {
  std::vector<const detail::Node*> order;
  if (!root.defined() || !root.requires_grad()) return order;
  std::unordered_set<const detail::Node*> visited;
  // (node, next parent index) explicit stack for a post-order walk
  std::vector<std::pair<const detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node(), 0);
  visited.insert(root.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  return order;
}

namespace {

void run_backward(const Tensor& output, std::span<const float> upstream) {
  if (!output.requires_grad()) throw ContractError("backward: tensor does not require grad");
  if (upstream.size() != output.numel()) {
    throw DimensionError("backward: upstream gradient has " + std::to_string(upstream.size()) +
                         " elements, output " + shape_string(output.shape()));
  }
  const auto order = topological_order(output);
  for (const detail::Node* node : order) {
    auto* mutable_node = const_cast<detail::Node*>(node);
    if (!node->is_leaf()) mutable_node->grad.assign(node->value.size(), 0.0f);
  }
  auto& root_grad = const_cast<detail::Node*>(output.node())->ensure_grad();
  for (std::size_t i = 0; i < upstream.size(); ++i) root_grad[i] += upstream[i];
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    auto* node = const_cast<detail::Node*>(*it);
    if (node->backward) node->backward(*node);
  }
}

}  // namespace

void backward(const Tensor& loss) {
  if (loss.numel() != 1) {
    throw ContractError("backward: loss must be a scalar, got shape " + shape_string(loss.shape()));
  }
  const float one = 1.0f;
  run_backward(loss, std::span<const float>(&one, 1));
}

void backward(const Tensor& output, std::span<const float> upstream) { run_backward(output, upstream); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

}  // namespace cutmixsl::tensor
