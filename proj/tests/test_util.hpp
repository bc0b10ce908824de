// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

// Shared helpers for the unit suites: random fills and a central
// finite-difference gradient oracle that only ever calls the forward path.

#pragma once

#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "cutmixsl/rng.hpp"
#include "cutmixsl/tensor/tensor.hpp"

namespace cutmixsl::testing {

inline std::vector<float> random_values(std::size_t n, std::uint64_t seed, float scale = 1.0f) {
  Rng rng(seed, Stream::kInit, 999);
  std::vector<float> v(n);
  for (auto& x : v) x = static_cast<float>(rng.normal()) * scale;
  return v;
}

inline tensor::Tensor random_tensor(tensor::Shape shape, std::uint64_t seed, bool requires_grad = true,
                                    float scale = 1.0f) {
  const auto n = tensor::numel(shape);
  return tensor::Tensor::from_values(std::move(shape), random_values(n, seed, scale), requires_grad);
}

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t failures = 0;
  double worst_excess = 0.0;  // max of |g - fd| - (atol + rtol |fd|)
  std::string first_failure;
};

/// Compares autodiff gradients of loss_fn() w.r.t. `params` against central
/// differences (f(w + h) - f(w - h)) / 2h evaluated in double. Gradients are
/// zeroed first. `stride` > 1 checks every stride-th element only.
inline GradCheckResult check_gradients(const std::function<tensor::Tensor()>& loss_fn,
                                       std::vector<tensor::Tensor> params, double rtol, double atol,
                                       float h = 1e-3f, std::size_t stride = 1) {
  for (auto& p : params) p.zero_grad();
  const tensor::Tensor loss = loss_fn();
  tensor::backward(loss);
  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    const std::vector<float> analytic(p.grad().begin(), p.grad().end());
    auto values = p.mutable_values();
    for (std::size_t i = 0; i < values.size(); i += stride) {
      const float saved = values[i];
      values[i] = saved + h;
      const double up = loss_fn().item_f64();
      values[i] = saved - h;
      const double down = loss_fn().item_f64();
      values[i] = saved;
      const double fd = (up - down) / (2.0 * static_cast<double>(h));
      const double g = analytic.empty() ? 0.0 : analytic[i];
      const double excess = std::abs(g - fd) - (atol + rtol * std::abs(fd));
      ++result.checked;
      if (excess > 0.0) {
        if (result.failures == 0) {
          char buf[160];
          std::snprintf(buf, sizeof buf, "param %zu elem %zu: autodiff %.6g vs fd %.6g", pi, i, g, fd);
          result.first_failure = buf;
        }
        ++result.failures;
      }
      result.worst_excess = std::max(result.worst_excess, excess);
    }
  }
  return result;
}

}  // namespace cutmixsl::testing
