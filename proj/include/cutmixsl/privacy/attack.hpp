// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "cutmixsl/data/dataset.hpp"
#include "cutmixsl/model/vit.hpp"
#include "json.hpp"

namespace cutmixsl::privacy {

/// What the attacker observes for one sample. kRaw and kZero are sanity
/// representations (the pixels themselves, and nothing at all).
enum class Representation {
  kSmashed,
  kCutSmashed,
  kMixup,
  kPatchCutMix,
  kShuffledCutMix,
  kRaw,
  kZero,
};

std::string representation_name(Representation r);
/// Throws ContractError on an unknown name.
Representation parse_representation(const std::string& name);

/// The five representations of the comparison table, most private first.
inline constexpr std::array<Representation, 5> kTableRepresentations = {
    Representation::kShuffledCutMix, Representation::kCutSmashed, Representation::kPatchCutMix,
    Representation::kMixup, Representation::kSmashed};

/// Reconstruction target for mixed representations.
enum class AttackTarget {
  kFirstClient,  // raw image of the first contributing client
  kMixedImage,   // pixel-space analogue of the mix (CutMix / Mixup image)
};

std::string target_name(AttackTarget t);
AttackTarget parse_target(const std::string& name);

struct AttackConfig {
  Representation representation = Representation::kSmashed;
  /// Fraction of the snapshot's train split used to fit the decoder.
  double train_fraction = 1.0;
  std::size_t decoder_width = 256;
  /// Hidden layers; 0 fits a single affine map.
  std::size_t decoder_depth = 1;
  std::size_t epochs = 30;
  std::size_t batch_size = 50;
  double lr = 1e-3;
  double weight_decay = 0.0;
  /// CutSmashed keep ratio.
  double keep_ratio = 0.5;
  /// Dirichlet concentration for the Mixup coefficient and CutMix allocation.
  double mix_alpha = 6.0;
  /// Gaussian noise added to the representation.
  double sigma_x = 0.0;
  AttackTarget target = AttackTarget::kFirstClient;
  std::uint64_t seed = 0;

  /// Throws ContractError for fraction outside (0, 1] and other bad values.
  void validate() const;
};

/// Frozen client state the attacker probes, with its data.
struct AttackSnapshot {
  const model::ModelConfig& config;
  const model::ClientSegment& client;
  const data::Dataset& train;
  const data::Dataset& test;
};

struct AttackReport {
  std::string representation;
  double test_mse = 0.0;  // mean over pixels and test samples
  std::size_t train_samples = 0;
  std::size_t test_samples = 0;
  /// Mean per-pixel variance of the test targets: the constant-predictor floor.
  double target_variance = 0.0;
  /// test_mse / target_variance; 1 means nothing beyond the mean leaked.
  double relative_mse = 0.0;
  double final_train_mse = 0.0;
  std::string decoder = "mlp";
  AttackConfig config;
};

/// Attacker observations paired with reconstruction targets, row-major.
struct AttackSet {
  std::size_t samples = 0;
  std::size_t input_dim = 0;
  std::size_t target_dim = 0;
  std::vector<float> inputs;
  std::vector<float> targets;
};

/// Builds the observations for every sample of `ds` (partners for mixed
/// representations are drawn within `ds`). `stream` separates train and test.
AttackSet make_attack_set(const AttackConfig& config, const model::ModelConfig& model,
                          const model::ClientSegment& client, const data::Dataset& ds, std::uint64_t stream);

/// Trains an MLP decoder on the chosen fraction of the train split with MSE
/// and AdamW, then reports test MSE. Deterministic for a fixed config.
AttackReport run_attack(const AttackConfig& config, const AttackSnapshot& snapshot);

nlohmann::json to_json(const AttackConfig& config);
AttackConfig attack_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttackReport& report);

}  // namespace cutmixsl::privacy
