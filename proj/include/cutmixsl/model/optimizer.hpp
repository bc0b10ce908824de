// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <vector>

#include "cutmixsl/model/vit.hpp"

namespace cutmixsl::model {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.05;
};

/// Decoupled weight decay Adam. Decay applies only where decays() holds.
class AdamW {
 public:
  AdamW(std::vector<NamedTensor> params, AdamWConfig config);

  /// One update with learning rate `lr` from the current leaf gradients.
  /// Parameters without a gradient are skipped but still count toward t.
  void step(double lr);
  void zero_grad();

  std::size_t steps() const { return t_; }
  const AdamWConfig& config() const { return config_; }
  const std::vector<NamedTensor>& params() const { return params_; }

 private:
  std::vector<NamedTensor> params_;
  std::vector<bool> decay_;
  std::vector<std::vector<float>> m_, v_;
  AdamWConfig config_;
  std::size_t t_ = 0;
};

/// Linear warmup over `warmup` steps to base_lr (step 0 gets base/warmup),
/// then cosine annealing to zero at `total`.
double warmup_cosine(double base_lr, std::size_t step, std::size_t warmup, std::size_t total);

}  // namespace cutmixsl::model
