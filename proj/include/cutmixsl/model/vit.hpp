// Copyright 2026 The cutmixsl Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cutmixsl/tensor/tensor.hpp"

namespace cutmixsl::model {

using tensor::Tensor;

struct ModelConfig {
  std::size_t image_size = 32;
  std::size_t channels = 3;
  std::size_t patch_size = 8;
  std::size_t d_m = 192;
  std::size_t depth = 6;
  std::size_t heads = 3;
  std::size_t mlp_ratio = 4;
  std::size_t num_classes = 10;

  /// M = (image_size / patch_size)^2
  std::size_t tokens() const;
  std::size_t patch_pixels() const { return channels * patch_size * patch_size; }
  std::size_t image_pixels() const { return channels * image_size * image_size; }
  /// Throws ContractError unless patch_size divides image_size, heads divides d_m
  /// and all sizes are positive (depth may be 0).
  void validate() const;

  static ModelConfig paper();
  static ModelConfig desk();
};

using NamedTensor = std::pair<std::string, Tensor>;

struct ClientSegment {
  Tensor patch_embed_weight;    // [d_m, patch_pixels]
  Tensor patch_embed_bias;      // [d_m]
  Tensor positional_embedding;  // [M, d_m]

  std::vector<NamedTensor> named_parameters() const;
  std::vector<Tensor> parameters() const;
  ClientSegment clone() const;
};

struct TransformerBlock {
  Tensor ln1_weight, ln1_bias;
  Tensor qkv_weight, qkv_bias;    // [3 d_m, d_m], [3 d_m]
  Tensor proj_weight, proj_bias;  // [d_m, d_m], [d_m]
  Tensor ln2_weight, ln2_bias;
  Tensor fc1_weight, fc1_bias;    // [mlp d_m, d_m]
  Tensor fc2_weight, fc2_bias;    // [d_m, mlp d_m]
};

struct ServerSegment {
  std::vector<TransformerBlock> blocks;
  Tensor class_token;  // [1, d_m]
  Tensor norm_weight, norm_bias;
  Tensor head_weight;  // [num_classes, d_m]
  Tensor head_bias;

  std::vector<NamedTensor> named_parameters() const;
  std::vector<Tensor> parameters() const;
  ServerSegment clone() const;
};

/// Truncated normal (|z| <= 2) std 0.02 for weight matrices and the class
/// token; zeros for biases and the positional embedding; ones for layer-norm
/// gains. Each parameter draws from its own substream of Stream::kInit.
std::pair<ClientSegment, ServerSegment> init_parameters(const ModelConfig& config, std::uint64_t seed);

/// [B, C, H, W] images -> [B, M, patch_pixels], patches in row-major grid
/// order, each flattened channel-major (c, y, x).
Tensor extract_patches(const ModelConfig& config, std::span<const float> images, std::size_t batch);

/// Patch embed + positional embedding: [B, C, H, W] -> [B, M, d_m].
Tensor client_forward(const ModelConfig& config, const ClientSegment& seg, std::span<const float> images,
                      std::size_t batch);

/// [B, M, d_m] tokens -> [B, num_classes] logits. The class token is
/// prepended here; clients never hold it.
Tensor server_forward(const ModelConfig& config, const ServerSegment& seg, const Tensor& tokens);

/// Whether AdamW weight decay applies: 2-D ".weight" matrices only.
bool decays(const std::string& name, const Tensor& t);

}  // namespace cutmixsl::model
