// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "cutmixsl/data/dataset.hpp"
#include "cutmixsl/mixer/mixer.hpp"
#include "cutmixsl/model/optimizer.hpp"
#include "cutmixsl/model/vit.hpp"
#include "cutmixsl/protocol/protocol.hpp"
#include "cutmixsl/protocol/transcript.hpp"

namespace cutmixsl::protocol {

enum class ServerStepping {
  kPerGroup,   // one server step per mix group
  kSummed,     // group gradients summed, one step per round
  kPerMember,  // k passes per group, each pass steps and serves one member
};

struct RoundOptions {
  std::size_t k_way = 1;
  double alpha = mixer::kAlphaInfinity;
  bool shuffle = false;
  GradientMode gradient_mode = GradientMode::kUnicast;
  ServerStepping stepping = ServerStepping::kPerGroup;
  bool fedavg = false;
  double sigma_x = 0.0;
  double sigma_y = 0.0;
  double server_lr = 1e-3;
  double client_lr = 1e-3;
  std::uint64_t seed = 0;
  /// Called after each server backward pass, before the step, with the
  /// server batch and the pass's gradients on the server parameters.
  std::function<void(const model::ServerSegment&, const mixer::CutMixBatch&)> on_server_backward;
};

struct ClientState {
  std::uint32_t id = 0;
  model::ClientSegment segment;
  model::AdamW optimizer;
  /// Set for the CutSmashed-only baseline (singleton groups, keep ratio < 1).
  std::optional<mixer::CutoutMasker> cutout;
};

struct SystemState {
  model::ModelConfig config;
  std::vector<ClientState> clients;
  model::ServerSegment server;
  model::AdamW server_optimizer;
  std::uint64_t round = 0;
  TranscriptWriter* transcript = nullptr;

  /// Every client starts from the same client segment; keep_ratio < 1 gives
  /// each client a cutout masker on its own mask substream.
  static SystemState create(const model::ModelConfig& config, std::size_t n_clients, std::uint64_t seed,
                            const model::AdamWConfig& optimizer, double keep_ratio = 1.0,
                            mixer::CutoutMode mask_mode = mixer::CutoutMode::kPerIteration);
};

struct ClientBatch {
  std::size_t batch = 0;
  std::vector<float> images;  // batch x C x H x W
  std::vector<float> labels;  // batch x num_classes, probability rows
};

struct RoundMetrics {
  std::uint64_t round = 0;
  std::vector<std::size_t> client_bytes;             // uplink, header and labels included
  std::vector<std::size_t> client_activation_bytes;  // a_i d_m 4 b
  std::size_t total_bytes = 0;
  std::size_t sequence_bytes = 0;  // mixer -> client assignments
  std::size_t server_updates = 0;
  double train_loss = 0.0;  // mean over server passes
  std::optional<double> eval_accuracy;
  double wall_time_s = 0.0;
};

/// One synchronous round: grouping, sequence assignment, client forward and
/// cut, upload, mixing, server passes and steps, gradient download, client
/// backward and step, then FedAvg when requested. Violations abort with a
/// ProtocolError naming the client.
RoundMetrics run_round(SystemState& state, const std::vector<ClientBatch>& batches, const RoundOptions& options);

/// Top-1 accuracy of one client segment composed with the server.
double evaluate_accuracy(const model::ModelConfig& config, const model::ClientSegment& client,
                         const model::ServerSegment& server, const data::Dataset& dataset, std::size_t batch = 250);

}  // namespace cutmixsl::protocol
