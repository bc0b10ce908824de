// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <string>
#include <vector>

#include "cutmixsl/runner/config.hpp"

namespace cutmixsl::runner {

inline constexpr int kMetricsVersion = 1;

struct LoadedData {
  data::Dataset train;
  data::Dataset test;
};

/// Synthetic data is generated; cifar10 reads the binary batches from
/// config.data.path or $CUTMIXSL_DATA_DIR. Errors carry the file context.
LoadedData load_data(const ExperimentConfig& config);

struct ExperimentResult {
  std::vector<protocol::RoundMetrics> rounds;
  std::vector<std::size_t> round_epoch;
  std::vector<double> epoch_accuracy;  // one per evaluated epoch
  double final_accuracy = 0.0;
  double best_accuracy = 0.0;
  std::size_t total_bytes = 0;
  std::size_t activation_bytes = 0;
  std::size_t sequence_bytes = 0;
  std::size_t server_updates = 0;
  double wall_time_s = 0.0;
  std::string csv;
  nlohmann::json summary;
  model::ModelConfig model;
  model::ClientSegment client;  // client 0 after training
  model::ServerSegment server;
};

std::string metrics_csv_header(std::size_t n_clients);

/// Trains for config.epochs, evaluating every eval_every epochs and at the
/// end. Writes metrics.csv and summary.json under config.output when set.
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Same, on already loaded data.
ExperimentResult run_experiment(const ExperimentConfig& config, const LoadedData& data);

}  // namespace cutmixsl::runner
