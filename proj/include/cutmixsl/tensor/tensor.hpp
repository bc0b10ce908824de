// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace cutmixsl::tensor {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_string(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<float> value;
  std::vector<float> grad;  // empty until first needed
  // Double-precision value of scalar reductions before rounding to float.
  double exact = std::numeric_limits<double>::quiet_NaN();
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  bool is_leaf() const { return parents.empty(); }
  std::vector<float>& ensure_grad();
};

}  // namespace detail

/// Dense row-major float32 tensor with an optional autodiff history.
///
/// A Tensor is a shared handle: copies alias the same storage and graph
/// node, as with framework tensors. Use clone() for an independent copy.
///
/// Gradients accumulate into leaves across backward() calls until
/// zero_grad(). Interior nodes are reset at the start of every backward(),
/// so running backward() twice on the same loss doubles the leaf gradients.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, float value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<float> values, bool requires_grad = false);
  static Tensor scalar(float value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;

  std::span<const float> values() const;
  /// Direct write access; only meaningful on leaves (parameters, inputs).
  std::span<float> mutable_values();
  float item() const;
  /// item() without the final float rounding when the producing op
  /// accumulated in double (sum, mean, losses).
  double item_f64() const;

  bool requires_grad() const;
  bool is_leaf() const;
  bool has_grad() const;
  /// Empty span when no gradient has been accumulated.
  std::span<const float> grad() const;
  std::span<float> mutable_grad();
  void zero_grad();

  /// Independent leaf with copied values.
  Tensor clone(bool requires_grad) const;
  Tensor detach() const { return clone(false); }

  const char* op_name() const;
  const detail::Node* node() const { return node_.get(); }

  // Internal: used by op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& handle() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Seeds d(loss)/d(loss) = 1 and runs reverse-mode accumulation.
/// Throws ContractError when loss is not a single element.
void backward(const Tensor& loss);

/// Vector-Jacobian product: backpropagates an upstream gradient of the same
/// shape as `output`.
void backward(const Tensor& output, std::span<const float> upstream);

/// Nodes reachable from root through requires_grad edges, inputs first.
/// backward() visits this list in reverse, once per node.
std::vector<const detail::Node*> topological_order(const Tensor& root);

bool grad_enabled();

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace cutmixsl::tensor
