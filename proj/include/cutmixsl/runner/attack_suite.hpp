// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "cutmixsl/privacy/attack.hpp"
#include "cutmixsl/runner/experiment.hpp"

namespace cutmixsl::runner {

struct AttackSuiteConfig {
  /// Trains the snapshot inline unless `checkpoint` names a model file.
  ExperimentConfig training;
  std::string checkpoint;
  /// Shared decoder settings; representation and fraction are overridden.
  privacy::AttackConfig attack;
  std::vector<double> fractions = {0.1, 1.0};
  /// Output file for the table JSON; empty writes nothing.
  std::string output;
};

struct AttackSuiteResult {
  std::vector<privacy::AttackReport> reports;  // representation-major
  nlohmann::json table;
};

AttackSuiteResult run_attack_suite(const AttackSuiteConfig& config);

/// Same, on an existing snapshot.
AttackSuiteResult run_attack_suite(const AttackSuiteConfig& config, const privacy::AttackSnapshot& snapshot);

}  // namespace cutmixsl::runner
