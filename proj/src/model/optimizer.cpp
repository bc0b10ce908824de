// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#include "cutmixsl/model/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace cutmixsl::model {

AdamW::AdamW(std::vector<NamedTensor> params, AdamWConfig config) : params_(std::move(params)), config_(config) {
  for (const auto& [name, t] : params_) {
    decay_.push_back(decays(name, t));
    m_.emplace_back(t.numel(), 0.0f);
    v_.emplace_back(t.numel(), 0.0f);
  }
}

void AdamW::step(double lr) {
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  const float b1 = static_cast<float>(config_.beta1), b2 = static_cast<float>(config_.beta2);
  for (std::size_t p = 0; p < params_.size(); ++p) {
    auto& t = params_[p].second;
    if (!t.has_grad()) continue;
    const auto g = t.grad();
    auto w = t.mutable_values();
    auto& m = m_[p];
    auto& v = v_[p];
    const float shrink = decay_[p] ? static_cast<float>(1.0 - lr * config_.weight_decay) : 1.0f;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * g[i];
      v[i] = b2 * v[i] + (1.0f - b2) * g[i] * g[i];
      const double mhat = m[i] / c1, vhat = v[i] / c2;
      w[i] = static_cast<float>(w[i] * shrink - lr * mhat / (std::sqrt(vhat) + config_.eps));
    }
  }
}

void AdamW::zero_grad() {
  for (auto& [_, t] : params_) t.zero_grad();
}

double warmup_cosine(double base_lr, std::size_t step, std::size_t warmup, std::size_t total) {
  if (step < warmup) return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  if (total <= warmup) return base_lr;
  const double progress = static_cast<double>(step - warmup) / static_cast<double>(total - warmup);
  return 0.5 * base_lr * (1.0 + std::cos(std::numbers::pi * std::min(progress, 1.0)));
}

}  // namespace cutmixsl::model
